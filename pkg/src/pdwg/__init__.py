"""Primal-dual weak Galerkin solver for the Poisson equation.

The package couples a piecewise-polynomial primal variable with a weak
dual variable through a stabilizer/weak-Laplacian saddle system, solves
it either monolithically or by a Robin-exchange domain-decomposition
iteration, and ships a verification harness that reproduces the scheme's
convergence orders and the iteration's energy identity.
"""

__version__ = "0.1.0"

from .dd import (IterationParams, IterationReport, RobinState,  # noqa: F401
                 build_subdomain, energy_audit, iterate, random_robin_state,
                 recover_mu, sweep, zero_robin_state)
from .mesh import (EdgeRecord, GeometryError, InterfaceRecord,  # noqa: F401
                   Mesh2D, MeshFormatError, Partition, build_mesh,
                   build_partition, build_uniform_mesh, read_mesh, tau,
                   write_mesh)
from .quadrature import QuadRule, make_edge_rule, make_tri_rule  # noqa: F401
from .saddle import (PrimalCoeffs, SaddleSystem, Solution,  # noqa: F401
                     SolverError, assemble, dump_system, local_b,
                     local_stabilizer, solve_monolithic, weak_harmonicity_max)
from .verification import (CASES, ErrorTriple, ManufacturedCase,  # noqa: F401
                           eoc, error_triple, study)
from .weak_calculus import (ElementContext, LocalWeakFunction,  # noqa: F401
                            WeakCoeffs, WeakDofMap, element_context,
                            element_contexts, interpolate_Qh, project_edge,
                            project_element, standalone_context,
                            weak_laplacian)
