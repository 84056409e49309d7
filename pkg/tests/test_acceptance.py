"""Acceptance suite: one test per criterion, each printing PASS/FAIL.

Criterion 4 is asserted at its stated (k+2) - 0.4 order bound for both
k = 1 and k = 2.  The k = 2 bound holds; for k = 1 the dual variable's
interior component converges at order 2 (the order-(k+2) duality argument
needs the primal projection to carry first-order gradient accuracy, which
a projection onto constants does not have), so the k = 1 assertion fails.
It is kept red deliberately rather than loosened; see the module-level
marker below and the measured orders in the failure message.
"""

import math
import time

import numpy as np
import pytest

from pdwg.checks import commuting_residual, random_polynomial, random_triangle
from pdwg.cli import main as cli_main
from pdwg.dd import IterationParams, iterate, random_robin_state
from pdwg.mesh import build_partition, build_uniform_mesh
from pdwg.saddle import assemble, solve_monolithic, weak_harmonicity_max
from pdwg.verification import CASES, eoc, error_triple
from pdwg.weak_calculus import element_contexts, standalone_context

ZERO = lambda p: np.zeros(len(p))


def _report(num, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    return ok


# --------------------------------------------------------------- fixtures

@pytest.fixture(scope="module")
def sine_studies():
    """Monolithic sine solves for k in {1, 2}, n in {4, 8, 16, 32}.

    Shared by criteria 3, 4 and 5; also records each solve's weak
    harmonicity and the wall time of the whole grid.
    """
    case = CASES["sine"]
    t0 = time.perf_counter()
    out = {}
    for k in (1, 2):
        rows = []
        for n in (4, 8, 16, 32):
            mesh = build_uniform_mesh(n)
            system = assemble(mesh, k, case.f, case.g)
            sol = solve_monolithic(system)
            rows.append({
                "n": n,
                "h": mesh.h_max,
                "errors": error_triple(sol, case, system),
                "weak_harmonicity": weak_harmonicity_max(system, sol),
            })
        out[k] = rows
    out["elapsed"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="module")
def zero_data_solves():
    """Homogeneous-data monolithic solves for criterion 2 (and 5)."""
    t0 = time.perf_counter()
    rows = []
    for k in (1, 2):
        for n in (2, 4, 8):
            mesh = build_uniform_mesh(n)
            system = assemble(mesh, k, ZERO, ZERO)
            sol = solve_monolithic(system)
            s_energy = float(max(sol.lam.values @ (system.S @ sol.lam.values), 0.0))
            rows.append({
                "n": n, "k": k,
                "u_norm": float(np.linalg.norm(sol.u.values)),
                "triple_bar": math.sqrt(s_energy),
                "weak_harmonicity": weak_harmonicity_max(system, sol),
            })
    return {"rows": rows, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="module")
def dd_sine_run():
    """dd-solve of criterion 6: n=4, k=1, per-element, sine case."""
    case = CASES["sine"]
    mesh = build_uniform_mesh(4)
    part = build_partition(mesh, "per-element")
    t0 = time.perf_counter()
    report = iterate(mesh, part, 1, case.f, case.g,
                     IterationParams(tol=1e-8))
    return {"report": report, "elapsed": time.perf_counter() - t0}


# -------------------------------------------------------------- criteria

def test_criterion_1_commuting_property(rng):
    t0 = time.perf_counter()
    worst = 0.0
    count = 0
    for k in (1, 2, 3):
        for _ in range(34 if k < 3 else 32):
            ctx = standalone_context(random_triangle(rng), k)
            value, grad, lap = random_polynomial(rng, k + 1)
            worst = max(worst, commuting_residual(ctx, value, grad, lap))
            count += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 1.0
    assert _report(1, ok,
                   f"commuting defect {worst:.2e} <= 1e-10 over {count} random "
                   f"triangles, k in {{1,2,3}} ({elapsed:.2f}s < 1s)")


def test_criterion_2_zero_solution(zero_data_solves):
    worst = max(r["u_norm"] + r["triple_bar"] for r in zero_data_solves["rows"])
    elapsed = zero_data_solves["elapsed"]
    ok = worst <= 1e-9 and elapsed < 5.0
    assert _report(2, ok,
                   f"max ||u_h|| + |||lambda_h||| = {worst:.2e} <= 1e-9 for "
                   f"n in {{2,4,8}}, k in {{1,2}} ({elapsed:.2f}s < 5s)")


def test_criterion_3_primal_rate(sine_studies):
    details = []
    ok = sine_studies["elapsed"] < 60.0
    for k, floor in ((1, 1 - 0.2), (2, 2 - 0.3)):
        rows = sine_studies[k]
        pairs = [(r["h"], r["errors"].combined_primal()) for r in rows]
        rate = eoc(pairs)[-1]
        details.append(f"k={k}: EOC {rate:.3f} >= {floor}")
        ok = ok and rate >= floor
    assert _report(3, ok, "; ".join(details)
                   + f" ({sine_studies['elapsed']:.1f}s < 60s)")


def test_criterion_4_dual_superconvergence(sine_studies):
    details = []
    ok = True
    for k in (1, 2):
        rows = sine_studies[k]
        pairs = [(r["h"], r["errors"].lambda0_l2) for r in rows]
        rate = eoc(pairs)[-1]
        floor = (k + 2) - 0.4
        details.append(f"k={k}: EOC {rate:.3f} >= {floor}")
        ok = ok and rate >= floor
    # known red for k=1: the measured interior-dual order is 2, not k+2;
    # the order-(k+2) duality mechanism needs gradient accuracy of the
    # primal projection and that fails for projections onto constants
    assert _report(4, ok, "; ".join(details))


def test_criterion_5_weak_harmonicity(sine_studies, zero_data_solves):
    worst = max(r["weak_harmonicity"] for k in (1, 2) for r in sine_studies[k])
    worst = max(worst, max(r["weak_harmonicity"]
                           for r in zero_data_solves["rows"]))
    ok = worst <= 1e-9
    assert _report(5, ok,
                   f"max elementwise weak Laplacian of the dual over all "
                   f"monolithic solves = {worst:.2e} <= 1e-9")


def test_criterion_6_energy_identity(dd_sine_run):
    report = dd_sine_run["report"]
    elapsed = dd_sine_run["elapsed"]
    defects = [r.energy_defect for r in report.rows if r.energy_defect is not None]
    ws = [r.weighted_residual for r in report.rows]
    monotone = all(b <= a * (1 + 1e-12) for a, b in zip(ws, ws[1:]))
    worst = max(defects)
    ok = worst <= 1e-9 and monotone and elapsed < 30.0
    assert _report(6, ok,
                   f"max audit defect {worst:.2e} <= 1e-9 over m=2.."
                   f"{report.iterations}, weighted residual non-increasing: "
                   f"{monotone} ({elapsed:.1f}s < 30s)")


def test_criterion_7_homogeneous_decay(rng):
    mesh = build_uniform_mesh(4)
    part = build_partition(mesh, "per-element")
    initial = random_robin_state(part, 1, rng)
    report = iterate(mesh, part, 1, ZERO, ZERO,
                     IterationParams(tol=1e-9, max_iters=10000,
                                     initial_state=initial))
    raw = [r.stab_energy_raw for r in report.rows]
    lam_ratio = (report.rows[-1].lambda_interface_norm
                 / report.rows[0].lambda_interface_norm)
    ok = min(raw) <= 1e-12 and raw[-1] <= 1e-12 and lam_ratio <= 1e-6
    assert _report(7, ok,
                   f"raw stabilizer energy fell to {raw[-1]:.2e} <= 1e-12 in "
                   f"{report.iterations} sweeps; interface data ratio "
                   f"{lam_ratio:.2e} <= 1e-6")


@pytest.fixture(scope="module")
def dd_agreement_runs():
    case = CASES["sine"]
    t0 = time.perf_counter()
    runs = []
    for n, strategy, p in ((4, "per-element", None), (8, "blocks", 2)):
        mesh = build_uniform_mesh(n)
        part = build_partition(mesh, strategy, p)
        contexts = element_contexts(mesh, 1)
        system = assemble(mesh, 1, case.f, case.g, contexts)
        reference = solve_monolithic(system)
        report = iterate(mesh, part, 1, case.f, case.g,
                         IterationParams(tol=1e-10, reference=reference),
                         contexts)
        runs.append((f"n={n} {strategy}" + (f"({p})" if p else ""), report))
    return {"runs": runs, "elapsed": time.perf_counter() - t0}


def test_criterion_8_dd_to_monolithic(dd_agreement_runs):
    details = []
    ok = dd_agreement_runs["elapsed"] < 120.0
    for label, report in dd_agreement_runs["runs"]:
        good = (report.converged and report.diff_to_monolithic <= 1e-6
                and report.jump_b <= 1e-6 and report.jump_n <= 1e-6)
        details.append(
            f"{label}: converged={report.converged} in {report.iterations}, "
            f"|u - u_h|={report.diff_to_monolithic:.2e}, "
            f"jumps=({report.jump_b:.2e},{report.jump_n:.2e})")
        ok = ok and good
    assert _report(8, ok, "; ".join(details)
                   + f" ({dd_agreement_runs['elapsed']:.1f}s < 120s)")


def test_criterion_9_worker_determinism(tmp_path):
    configs = [
        ["dd-solve", "--n", "4", "--k", "1", "--case", "sine",
         "--partition", "per-element", "--tol", "1e-8"],
        ["dd-solve", "--n", "8", "--k", "1", "--case", "sine",
         "--partition", "blocks", "--p", "2", "--tol", "1e-10"],
    ]
    ok = True
    details = []
    for i, base in enumerate(configs):
        contents = []
        for workers in ("1", "8"):
            trace = tmp_path / f"trace-{i}-{workers}.csv"
            code = cli_main(base + ["--workers", workers, "--trace", str(trace)])
            contents.append((code, trace.read_bytes()))
        same = contents[0] == contents[1]
        details.append(f"config {i}: bit-identical={same}")
        ok = ok and same
    assert _report(9, ok, "; ".join(details))


def test_criterion_10_polynomial_exactness():
    worst = 0.0
    tried = []
    for k, name in ((1, "const"), (2, "const"), (2, "linear"),
                    (3, "linear"), (3, "quadratic")):
        case = CASES[name]
        assert case.poly_degree <= k - 1
        for n in (2, 4, 8) if k < 3 else (2, 4):
            mesh = build_uniform_mesh(n)
            system = assemble(mesh, k, case.f, case.g)
            et = error_triple(solve_monolithic(system), case, system)
            worst = max(worst, et.triple_bar, et.e_h_l2, et.lambda0_l2)
            tried.append(f"k={k}/{name}/n={n}")
    ok = worst <= 1e-8
    assert _report(10, ok,
                   f"max error {worst:.2e} <= 1e-8 over {len(tried)} "
                   f"reproducible-polynomial solves")
