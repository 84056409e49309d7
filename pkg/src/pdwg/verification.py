"""Manufactured solutions, error quantities and convergence-order studies.

The three tracked error quantities are the stabilizer seminorm of the
dual variable (whose exact value is zero, so the dual itself is the
error), the L2 distance of the primal solution to the elementwise
L2 projection of the exact solution, and the plain L2 norm of the
dual's interior component.  Refining h by halves, their empirical
convergence orders reproduce k, k and k+2.
"""

import math
from dataclasses import dataclass

import numpy as np

from .basis import element_basis, eval_basis
from .dd import IterationParams, IterationReport, iterate
from .mesh import Mesh2D, Partition, build_uniform_mesh
from .quadrature import make_tri_rule, tri_rule_physical
from .saddle import SaddleSystem, Solution, assemble, solve_monolithic, stabilizer_energy
from .weak_calculus import element_contexts

#: error-measurement quadrature runs two orders above assembly
ERROR_RULE_MARGIN = 4

#: error values at or below this level count as exact reproduction
EXACT_REPRODUCTION_TOL = 1e-10


@dataclass(frozen=True)
class ManufacturedCase:
    """An exact solution with matching Laplacian load and boundary trace.

    Fields are vectorized callables on (n, 2) point arrays; f equals the
    Laplacian of u (the model problem is lap u = f) and g is the trace
    of u on the boundary.  poly_degree tags globally polynomial cases.
    """

    name: str
    u: object
    grad_u: object
    f: object
    g: object
    poly_degree: int | None = None


def _sine():
    def u(p):
        return np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])

    def grad(p):
        return np.column_stack([
            np.pi * np.cos(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]),
            np.pi * np.sin(np.pi * p[:, 0]) * np.cos(np.pi * p[:, 1])])

    def f(p):
        return -2.0 * np.pi ** 2 * u(p)

    return ManufacturedCase("sine", u, grad, f, u)


def _harmonic():
    def u(p):
        return np.exp(p[:, 0]) * np.sin(p[:, 1])

    def grad(p):
        return np.column_stack([np.exp(p[:, 0]) * np.sin(p[:, 1]),
                                np.exp(p[:, 0]) * np.cos(p[:, 1])])

    def f(p):
        return np.zeros(len(p))

    return ManufacturedCase("harmonic", u, grad, f, u)


def _poly(name, degree, u, grad):
    def f(p):
        return np.zeros(len(p))

    return ManufacturedCase(name, u, grad, f, u, poly_degree=degree)


CASES = {
    "sine": _sine(),
    "harmonic": _harmonic(),
    "const": _poly("const", 0,
                   lambda p: np.ones(len(p)),
                   lambda p: np.zeros((len(p), 2))),
    "linear": _poly("linear", 1,
                    lambda p: p[:, 0].copy(),
                    lambda p: np.column_stack([np.ones(len(p)), np.zeros(len(p))])),
    "quadratic": _poly("quadratic", 2,
                       lambda p: p[:, 0] ** 2 - p[:, 1] ** 2,
                       lambda p: np.column_stack([2 * p[:, 0], -2 * p[:, 1]])),
    "cubic": _poly("cubic", 3,
                   lambda p: p[:, 0] ** 3 - 3 * p[:, 0] * p[:, 1] ** 2,
                   lambda p: np.column_stack([
                       3 * p[:, 0] ** 2 - 3 * p[:, 1] ** 2,
                       -6 * p[:, 0] * p[:, 1]])),
}


@dataclass(frozen=True)
class ErrorTriple:
    """Stabilizer seminorm, projected-primal L2 error, dual-interior L2 norm."""

    triple_bar: float
    e_h_l2: float
    lambda0_l2: float

    def combined_primal(self) -> float:
        return self.triple_bar + self.e_h_l2


def project_primal(case_u, mesh: Mesh2D, k: int) -> list:
    """Per-element degree-(k-1) projection coefficients of a scalar field.

    Uses the dedicated error-measurement rule (two orders above assembly)
    so measurement noise stays below any tracked error.
    """
    rule = make_tri_rule(min(2 * k + 2 + ERROR_RULE_MARGIN, 20))
    coeffs = []
    for t in range(mesh.n_elements):
        verts = mesh.element_vertices(t)
        basis = element_basis(k - 1, verts)
        pts, w = tri_rule_physical(rule, verts)
        v = eval_basis(basis, pts)
        gram = (v * w[:, None]).T @ v
        rhs = v.T @ (w * np.asarray(case_u(pts), float))
        coeffs.append(np.linalg.solve(0.5 * (gram + gram.T), rhs))
    return coeffs


def primal_error_norm(u_values, projected, contexts) -> float:
    """L2 distance between a primal coefficient vector and a projection."""
    total = 0.0
    for t, ctx in enumerate(contexts):
        d = u_values.element_block(t) - projected[t]
        total += float(d @ ctx.mass_u @ d)
    return float(np.sqrt(total))


def error_triple(solution: Solution, case: ManufacturedCase,
                 system: SaddleSystem) -> ErrorTriple:
    """The three error quantities of a monolithic solve."""
    lam = solution.lam.values
    triple_bar = float(np.sqrt(stabilizer_energy(system, lam)))
    projected = project_primal(case.u, system.mesh, system.k)
    e_h = primal_error_norm(solution.u, projected, system.contexts)
    lam0 = 0.0
    for t, ctx in enumerate(system.contexts):
        c = solution.lam.interior_block(t)
        lam0 += float(c @ ctx.mass_k @ c)
    return ErrorTriple(triple_bar, e_h, float(np.sqrt(lam0)))


def dd_error_triple(report: IterationReport, case: ManufacturedCase,
                    mesh: Mesh2D, k: int, contexts) -> ErrorTriple:
    """Error quantities of a decomposed solve.

    The stabilizer quadratic form decomposes over subdomains (interface
    dofs are duplicated), and interior dual blocks are element-owned, so
    all three quantities can be read off the final local iterates.
    """
    triple_sq = 0.0
    lam0 = 0.0
    for lam, problem in zip(report.lambda_locals, report.problems):
        triple_sq += problem.stab_energy(lam)
        for t in problem.elements:
            c = lam[problem.interior_slices[int(t)]]
            lam0 += float(c @ contexts[int(t)].mass_k @ c)
    projected = project_primal(case.u, mesh, k)
    e_h = primal_error_norm(report.u, projected, contexts)
    return ErrorTriple(float(np.sqrt(max(triple_sq, 0.0))), e_h,
                       float(np.sqrt(lam0)))


def eoc(errors) -> list:
    """Empirical convergence orders of (h, value) pairs under halving.

    Values at or below the exact-reproduction level yield math.inf
    sentinels, which callers exclude from slope checks.
    """
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two (h, value) pairs")
    rates = []
    for (h0, e0), (h1, e1) in zip(errors, errors[1:]):
        if not h1 < h0:
            raise ValueError("h values must decrease")
        if abs(h0 / h1 - 2.0) > 1e-9:
            raise ValueError("h values must halve between entries")
        if e0 <= EXACT_REPRODUCTION_TOL or e1 <= EXACT_REPRODUCTION_TOL:
            rates.append(math.inf)
            continue
        rates.append(math.log(e0 / e1) / math.log(h0 / h1))
    return rates


@dataclass
class StudyRow:
    n: int
    h: float
    errors: ErrorTriple
    iterations: int | None = None
    energy_defect: float | None = None
    converged: bool | None = None


@dataclass
class StudyTable:
    """Rows of a refinement study plus per-quantity convergence orders."""

    case: str
    k: int
    mode: str
    rows: list
    rates_triple_bar: list
    rates_e_h: list
    rates_lambda0: list
    rates_combined: list


def study(case: ManufacturedCase, k: int, n_list, mode: str = "monolithic",
          dd_params: IterationParams | None = None,
          partition_strategy: str = "per-element",
          partition_p: int | None = None) -> StudyTable:
    """Run a mesh-refinement study and tabulate errors with their orders.

    n_list must be strictly increasing with each entry double the last.
    mode "monolithic" solves the coupled system directly; mode "dd" runs
    the exchange iteration (with dd_params) and reports its iteration
    counts and worst energy defects alongside the errors.
    """
    n_list = [int(n) for n in n_list]
    for a, b in zip(n_list, n_list[1:]):
        if b != 2 * a:
            raise ValueError("n_list entries must double: got "
                             f"{a} followed by {b}")
    if mode not in ("monolithic", "dd"):
        raise ValueError(f"unknown study mode {mode!r}")

    rows = []
    for n in n_list:
        mesh = build_uniform_mesh(n)
        contexts = element_contexts(mesh, k)
        if mode == "monolithic":
            system = assemble(mesh, k, case.f, case.g, contexts)
            solution = solve_monolithic(system)
            triple = error_triple(solution, case, system)
            rows.append(StudyRow(n=n, h=mesh.h_max, errors=triple))
        else:
            from .mesh import build_partition

            partition = build_partition(mesh, partition_strategy, partition_p)
            report = iterate(mesh, partition, k, case.f, case.g,
                             dd_params or IterationParams(), contexts)
            triple = dd_error_triple(report, case, mesh, k, contexts)
            rows.append(StudyRow(n=n, h=mesh.h_max, errors=triple,
                                 iterations=report.iterations,
                                 energy_defect=report.energy_defect_max,
                                 converged=report.converged))

    def _rates(pick):
        return eoc([(row.h, pick(row.errors)) for row in rows])

    return StudyTable(
        case=case.name, k=k, mode=mode, rows=rows,
        rates_triple_bar=_rates(lambda e: e.triple_bar),
        rates_e_h=_rates(lambda e: e.e_h_l2),
        rates_lambda0=_rates(lambda e: e.lambda0_l2),
        rates_combined=_rates(lambda e: e.combined_primal()))
