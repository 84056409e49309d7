"""Assembly and direct solution of the primal-dual saddle-point scheme.

The scheme couples a primal variable u (piecewise P_{k-1}) with a dual
variable lambda (a weak function with zero boundary trace) through

    s(lambda, sigma) + b(u, sigma) = (f, sigma_0) + <g, sigma_n>_Gamma
    b(v, lambda)                  = 0

for all test functions sigma and v, where s is the boundary least-squares
stabilizer and b(u, sigma) = sum_T (u, weak_laplacian(sigma))_T.  In
matrix form this is the sparse symmetric indefinite block system
[[S, B^T], [B, 0]].  Dirichlet data enters only through the boundary-flux
moments of the right-hand side; boundary trace dofs are eliminated.

Local matrix computation is independent per element; the global scatter
runs in a fixed element order so assembled matrices are identical
regardless of any worker configuration.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.io import mmwrite
from scipy.sparse.linalg import splu

from .basis import basis_dim
from .mesh import Mesh2D
from .quadrature import make_edge_rule, edge_rule_physical
from .weak_calculus import (DATA_EDGE_DEGREE, ElementContext, WeakCoeffs,
                            WeakDofMap, element_contexts)


class SolverError(RuntimeError):
    """Direct factorization or solve failed; points at an assembly bug."""


@dataclass(frozen=True)
class PrimalDofMap:
    """Per-element blocks of P_{k-1} coefficients for the primal variable."""

    n_elements: int
    k: int

    @property
    def block(self) -> int:
        return basis_dim(self.k - 1)

    @property
    def total(self) -> int:
        return self.n_elements * self.block

    def element_slice(self, t: int):
        return slice(t * self.block, (t + 1) * self.block)


@dataclass
class PrimalCoeffs:
    dof_map: PrimalDofMap
    values: np.ndarray

    def element_block(self, t: int) -> np.ndarray:
        return self.values[self.dof_map.element_slice(t)]


@dataclass
class SaddleSystem:
    """Assembled blocks, right-hand side and dof maps of one problem."""

    S: sp.csr_matrix
    B: sp.csr_matrix
    rhs_lambda: np.ndarray
    rhs_u: np.ndarray
    lambda_map: WeakDofMap
    u_map: PrimalDofMap
    mesh: Mesh2D
    k: int
    contexts: list

    def full_matrix(self) -> sp.csc_matrix:
        return sp.bmat([[self.S, self.B.T], [self.B, None]], format="csc")

    def full_rhs(self) -> np.ndarray:
        return np.concatenate([self.rhs_lambda, self.rhs_u])


@dataclass
class Solution:
    """Monolithic solve result: primal u, dual lambda, solve residual."""

    u: PrimalCoeffs
    lam: WeakCoeffs
    residual: float


def boundary_flux_load(mesh: Mesh2D, e: int, g, k: int) -> np.ndarray:
    """Moments <g, L_q>_e of the Dirichlet datum on a boundary edge.

    The stored normal of a boundary edge points out of the domain, so the
    flux test functions already carry the outward convention.
    """
    rec = mesh.edges[e]
    lo, hi = rec.endpoints
    rule = make_edge_rule(DATA_EDGE_DEGREE)
    s, pts, w = edge_rule_physical(rule, mesh.vertices[lo], mesh.vertices[hi])
    legv = np.polynomial.legendre.legvander(s, k - 1)
    return legv.T @ (w * np.asarray(g(pts), float))


def local_stabilizer(ctx: ElementContext) -> np.ndarray:
    """Dense stabilizer matrix over one element's weak dofs.

    Quadratic form h^-3 |Q_b sigma_0 - sigma_b|^2_dT
    + h^-1 |grad sigma_0 . n - tau sigma_n|^2_dT.
    """
    return ctx.stab


def local_b(ctx: ElementContext) -> np.ndarray:
    """Dense pairing matrix (phi_i, weak_laplacian(chi_j))_T."""
    return ctx.b_pair


def assemble(mesh: Mesh2D, k: int, f, g, contexts=None) -> SaddleSystem:
    """Assemble the global saddle system for load f and boundary datum g.

    Parameters
    ----------
    mesh : Mesh2D
    k : degree of the weak space (1, 2 or 3)
    f, g : scalar fields (callables on (n, 2) point arrays); f is the
        Laplacian datum, g the Dirichlet datum.
    contexts : optional precomputed element contexts.
    """
    if k not in (1, 2, 3):
        raise ValueError(f"degree k={k} unsupported (must be 1, 2 or 3)")
    if contexts is None:
        contexts = element_contexts(mesh, k)
    lam_map = WeakDofMap(mesh, k, homogeneous=True)
    u_map = PrimalDofMap(mesh.n_elements, k)

    s_rows, s_cols, s_vals = [], [], []
    b_rows, b_cols, b_vals = [], [], []
    rhs_lambda = np.zeros(lam_map.total)
    for t, ctx in enumerate(contexts):
        gmap = lam_map.element_gather(t)
        keep = np.flatnonzero(gmap >= 0)
        gk = gmap[keep]
        s_loc = ctx.stab[np.ix_(keep, keep)]
        s_rows.append(np.repeat(gk, len(gk)))
        s_cols.append(np.tile(gk, len(gk)))
        s_vals.append(s_loc.ravel())
        urows = np.arange(u_map.element_slice(t).start,
                          u_map.element_slice(t).stop)
        b_loc = ctx.b_pair[:, keep]
        b_rows.append(np.repeat(urows, len(gk)))
        b_cols.append(np.tile(gk, len(urows)))
        b_vals.append(b_loc.ravel())
        rhs_lambda[lam_map.interior_slice(t)] += ctx.load_interior(f)

    for e, rec in enumerate(mesh.edges):
        if rec.is_boundary:
            rhs_lambda[lam_map.flux_slice(e)] += boundary_flux_load(mesh, e, g, k)

    n_lam = lam_map.total
    S = sp.coo_matrix(
        (np.concatenate(s_vals), (np.concatenate(s_rows), np.concatenate(s_cols))),
        shape=(n_lam, n_lam)).tocsr()
    B = sp.coo_matrix(
        (np.concatenate(b_vals), (np.concatenate(b_rows), np.concatenate(b_cols))),
        shape=(u_map.total, n_lam)).tocsr()
    return SaddleSystem(S=S, B=B, rhs_lambda=rhs_lambda,
                        rhs_u=np.zeros(u_map.total), lambda_map=lam_map,
                        u_map=u_map, mesh=mesh, k=k, contexts=contexts)


def solve_monolithic(system: SaddleSystem) -> Solution:
    """Solve the assembled system with a sparse direct factorization.

    One step of iterative refinement keeps the relative residual at
    round-off level.  Raises SolverError with dof diagnostics if the
    factorization fails or produces non-finite values; the scheme itself
    is provably nonsingular, so a failure signals an assembly bug.
    """
    K = system.full_matrix()
    b = system.full_rhs()
    n_lam = system.lambda_map.total
    try:
        lu = splu(K)
        x = lu.solve(b)
    except (RuntimeError, ValueError) as exc:
        raise SolverError(
            f"saddle factorization failed ({exc}); "
            f"{n_lam} dual dofs + {system.u_map.total} primal dofs, "
            f"mesh with {system.mesh.n_elements} elements, k={system.k}"
        ) from exc
    if not np.all(np.isfinite(x)):
        raise SolverError(
            f"solve produced non-finite values "
            f"({n_lam} dual dofs + {system.u_map.total} primal dofs)")
    scale = float(np.linalg.norm(b))
    resid = float(np.linalg.norm(K @ x - b))
    if scale > 0.0 and resid / scale > 1e-13:
        x = x + lu.solve(b - K @ x)
        resid = float(np.linalg.norm(K @ x - b))
    residual = resid / scale if scale > 0.0 else resid
    lam = WeakCoeffs(system.lambda_map, x[:n_lam])
    u = PrimalCoeffs(system.u_map, x[n_lam:])
    return Solution(u=u, lam=lam, residual=residual)


def weak_harmonicity_max(system: SaddleSystem, solution: Solution) -> float:
    """max_T of the elementwise L2 norm of the dual's weak Laplacian."""
    worst = 0.0
    for t, ctx in enumerate(system.contexts):
        local = solution.lam.local_function(t)
        c = ctx.wlap_op @ ctx.pack(local)
        worst = max(worst, float(np.sqrt(c @ ctx.mass_u @ c)))
    return worst


def stabilizer_energy(system: SaddleSystem, lam_values: np.ndarray) -> float:
    """Quadratic form of the assembled stabilizer block."""
    return float(max(lam_values @ (system.S @ lam_values), 0.0))


def dump_system(system: SaddleSystem, path_prefix: str) -> tuple:
    """Write the full matrix (Matrix Market) and rhs (plain vector file).

    Returns the two paths written: <prefix>.mtx and <prefix>.rhs.txt.
    """
    mtx_path = f"{path_prefix}.mtx"
    rhs_path = f"{path_prefix}.rhs.txt"
    mmwrite(mtx_path, system.full_matrix().tocoo(), symmetry="general")
    np.savetxt(rhs_path, system.full_rhs())
    return mtx_path, rhs_path
