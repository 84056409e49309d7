"""Canned invariant suite behind the `check` subcommand.

Each check runs a small self-contained experiment and reports pass/fail
with a measured value, so a broken build names the violated invariant.
"""

import numpy as np

from .basis import basis_dim, element_basis, eval_basis
from .dd import IterationParams, iterate, random_robin_state
from .mesh import build_partition, build_uniform_mesh
from .quadrature import make_tri_rule
from .saddle import assemble, solve_monolithic, weak_harmonicity_max
from .verification import CASES, error_triple
from .weak_calculus import (LocalWeakFunction, project_element,
                            standalone_context)


def random_triangle(rng, min_quality: float = 0.25):
    """Random counterclockwise triangle with bounded shape regularity."""
    from .geometry import signed_area

    while True:
        verts = rng.uniform(-1.0, 1.0, size=(3, 2))
        a = signed_area(verts)
        if a < 0:
            verts = verts[[0, 2, 1]]
            a = -a
        diam = max(np.linalg.norm(verts[i] - verts[(i + 1) % 3])
                   for i in range(3))
        if a > min_quality * diam ** 2 / 4.0:
            return verts


def random_polynomial(rng, degree: int):
    """Random polynomial of the given total degree with its Laplacian."""
    exps = [(a, t - a) for t in range(degree + 1) for a in range(t + 1)]
    coeffs = rng.standard_normal(len(exps))

    def value(p):
        out = np.zeros(len(p))
        for c, (a, b) in zip(coeffs, exps):
            out += c * p[:, 0] ** a * p[:, 1] ** b
        return out

    def grad(p):
        out = np.zeros((len(p), 2))
        for c, (a, b) in zip(coeffs, exps):
            if a > 0:
                out[:, 0] += c * a * p[:, 0] ** (a - 1) * p[:, 1] ** b
            if b > 0:
                out[:, 1] += c * b * p[:, 0] ** a * p[:, 1] ** (b - 1)
        return out

    def lap(p):
        out = np.zeros(len(p))
        for c, (a, b) in zip(coeffs, exps):
            if a >= 2:
                out += c * a * (a - 1) * p[:, 0] ** (a - 2) * p[:, 1] ** b
            if b >= 2:
                out += c * b * (b - 1) * p[:, 0] ** a * p[:, 1] ** (b - 2)
        return out

    return value, grad, lap


def commuting_residual(ctx, value, grad, lap) -> float:
    """Relative elementwise defect of the projection/weak-Laplacian commute."""
    sigma0 = project_element(value, ctx.k, ctx.verts)
    sb = np.empty((3, ctx.k))
    sn = np.empty((3, ctx.k))
    from .weak_calculus import project_edge

    for le in range(3):
        p0, p1 = ctx.edge_endpoints[le]
        normal = ctx.normals[le]
        sb[le] = project_edge(value, p0, p1, ctx.k)
        sn[le] = project_edge(
            lambda pts: np.asarray(grad(pts), float) @ normal, p0, p1, ctx.k)
    lhs = ctx.wlap_op @ ctx.pack(LocalWeakFunction(sigma0, sb, sn))
    rhs = project_element(lap, ctx.k - 1, ctx.verts)
    d = lhs - rhs
    defect = float(np.sqrt(d @ ctx.mass_u @ d))
    w_proj = project_element(value, ctx.k + 1, ctx.verts)
    basis = element_basis(ctx.k + 1, ctx.verts)
    gram_rule = make_tri_rule(2 * (ctx.k + 1))
    from .quadrature import tri_rule_physical

    pts, w = tri_rule_physical(gram_rule, ctx.verts)
    v = eval_basis(basis, pts)
    norm_w = float(np.sqrt(max(w_proj @ ((v * w[:, None]).T @ v) @ w_proj, 0.0)))
    return defect / max(norm_w, 1e-30)


def check_quadrature() -> tuple:
    worst = 0.0
    for degree in (1, 4, 8, 12, 20):
        rule = make_tri_rule(degree)
        for a in range(rule.exactness_degree + 1):
            for b in range(rule.exactness_degree + 1 - a):
                import math

                exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
                xy = rule.points[:, 1:]
                got = float(np.sum(rule.weights * xy[:, 0] ** a * xy[:, 1] ** b))
                worst = max(worst, abs(got - exact) / max(1.0, abs(exact)))
    return worst <= 1e-12, f"max relative quadrature defect {worst:.3e}"


def check_commuting(seed: int = 0) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in (1, 2, 3):
        for _ in range(20):
            ctx = standalone_context(random_triangle(rng), k)
            value, grad, lap = random_polynomial(rng, k + 1)
            worst = max(worst, commuting_residual(ctx, value, grad, lap))
    return worst <= 1e-10, f"max relative commuting defect {worst:.3e}"


def check_zero_solution() -> tuple:
    zero = lambda p: np.zeros(len(p))
    worst = 0.0
    for n in (2, 4):
        mesh = build_uniform_mesh(n)
        system = assemble(mesh, 1, zero, zero)
        sol = solve_monolithic(system)
        worst = max(worst, float(np.linalg.norm(sol.u.values)),
                    float(np.linalg.norm(sol.lam.values)))
    return worst <= 1e-9, f"max solution norm with zero data {worst:.3e}"


def check_polynomial_exactness() -> tuple:
    case = CASES["linear"]
    mesh = build_uniform_mesh(4)
    system = assemble(mesh, 2, case.f, case.g)
    sol = solve_monolithic(system)
    triple = error_triple(sol, case, system)
    worst = max(triple.triple_bar, triple.e_h_l2, triple.lambda0_l2)
    return worst <= 1e-8, f"max error on a reproducible polynomial {worst:.3e}"


def check_symmetry() -> tuple:
    case = CASES["sine"]
    mesh = build_uniform_mesh(3)
    system = assemble(mesh, 1, case.f, case.g)
    K = system.full_matrix()
    d = abs(K - K.T)
    worst = float(d.max()) if d.nnz else 0.0
    return worst == 0.0, f"max |K - K^T| entry {worst:.3e}"


def check_weak_harmonicity() -> tuple:
    case = CASES["sine"]
    mesh = build_uniform_mesh(4)
    system = assemble(mesh, 1, case.f, case.g)
    sol = solve_monolithic(system)
    worst = weak_harmonicity_max(system, sol)
    return worst <= 1e-9, f"max elementwise weak Laplacian of dual {worst:.3e}"


def check_energy_identity(workers: int = 1) -> tuple:
    case = CASES["sine"]
    mesh = build_uniform_mesh(2)
    partition = build_partition(mesh, "per-element")
    report = iterate(mesh, partition, 1, case.f, case.g,
                     IterationParams(tol=1e-9, max_iters=400, workers=workers))
    defect = report.energy_defect_max or 0.0
    monotone = all(b.weighted_residual <= a.weighted_residual * (1 + 1e-12)
                   for a, b in zip(report.rows, report.rows[1:]))
    ok = defect <= 1e-9 and monotone
    return ok, (f"max energy defect {defect:.3e}, "
                f"weighted residual monotone: {monotone}")


def check_homogeneous_decay(seed: int = 0) -> tuple:
    zero = lambda p: np.zeros(len(p))
    mesh = build_uniform_mesh(2)
    partition = build_partition(mesh, "per-element")
    rng = np.random.default_rng(seed)
    initial = random_robin_state(partition, 1, rng)
    report = iterate(mesh, partition, 1, zero, zero,
                     IterationParams(tol=1e-9, max_iters=2000,
                                     initial_state=initial))
    final_raw = report.rows[-1].stab_energy_raw
    return (report.converged and final_raw <= 1e-12,
            f"final raw stabilizer energy {final_raw:.3e} "
            f"after {report.iterations} sweeps")


def run_checks(seed: int = 0, workers: int = 1) -> list:
    """Run every invariant; returns (name, passed, detail) triples."""
    return [
        ("quadrature-exactness",) + check_quadrature(),
        ("commuting-property",) + check_commuting(seed),
        ("zero-data-uniqueness",) + check_zero_solution(),
        ("polynomial-exactness",) + check_polynomial_exactness(),
        ("system-symmetry",) + check_symmetry(),
        ("weak-harmonicity",) + check_weak_harmonicity(),
        ("energy-identity",) + check_energy_identity(workers),
        ("homogeneous-decay",) + check_homogeneous_decay(seed),
    ]
