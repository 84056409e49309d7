"""Command-line interface: solve, dd-solve, study, check, mesh-info.

Configuration can come from a flat key=value file (--config); explicit
flags override file entries.  Identical configurations produce
byte-identical output files for any worker count.
"""

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dd import IterationParams, iterate
from .mesh import (build_partition, build_uniform_mesh, read_mesh, tau,
                   write_mesh)
from .report import (SCHEMA, format_study, format_trace_csv,
                     save_convergence_figure, save_iteration_figure)
from .saddle import (assemble, dump_system, solve_monolithic,
                     weak_harmonicity_max)
from .verification import CASES, dd_error_triple, error_triple, study
from .weak_calculus import element_contexts

_DEFAULTS = {
    "n": 4,
    "k": 1,
    "case": "sine",
    "partition": "per-element",
    "p": 2,
    "beta": "auto",
    "sigma": "auto",
    "tol": 1e-8,
    "max_iters": 10000,
    "workers": 1,
    "format": "text",
    "seed": 0,
    "n_list": "4,8,16",
    "mode": "monolithic",
}


@dataclass
class RunConfig:
    """Resolved run configuration; every key mirrors a CLI flag."""

    command: str
    n: int
    k: int
    case: str
    partition: str
    p: int
    beta: float | None
    sigma: float | None
    tol: float
    max_iters: int
    workers: int
    format: str
    seed: int
    n_list: list
    mode: str
    mesh_in: str | None = None
    mesh_out: str | None = None
    out: str | None = None
    trace: str | None = None
    plot: str | None = None
    no_plot: bool = False
    dump_system: str | None = None
    reference: bool = False
    timings: bool = False

    def validate(self):
        if self.k not in (1, 2, 3):
            raise ValueError(f"--k must be 1, 2 or 3 (got {self.k})")
        if self.tol <= 0:
            raise ValueError("--tol must be positive")
        if self.workers < 1:
            raise ValueError("--workers must be >= 1")
        if self.case not in CASES:
            raise ValueError(
                f"unknown case {self.case!r}; choose from {sorted(CASES)}")
        if self.partition not in ("per-element", "blocks"):
            raise ValueError("--partition must be per-element or blocks")
        if self.format not in ("csv", "text", "json"):
            raise ValueError("--format must be csv, text or json")


def _parse_weight(text):
    if text is None or text == "auto":
        return None
    return float(text)


def _read_config_file(path) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdwg",
        description="Primal-dual weak Galerkin Poisson solver with a "
                    "Robin-exchange domain-decomposition iteration.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p, dd=False, study_mode=False):
        p.add_argument("--config", help="flat key=value configuration file")
        p.add_argument("--n", type=int, help="cells per side of the unit square")
        p.add_argument("--k", type=int, help="weak space degree (1, 2 or 3)")
        p.add_argument("--case", help=f"manufactured case: {', '.join(sorted(CASES))}")
        p.add_argument("--mesh-in", help="read the mesh from a pdwg-mesh v1 file")
        p.add_argument("--mesh-out", help="write the mesh to a pdwg-mesh v1 file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "text", "json"))
        p.add_argument("--workers", type=int)
        p.add_argument("--seed", type=int,
                       help="seed for randomized test utilities only")
        if dd:
            p.add_argument("--partition", choices=("per-element", "blocks"))
            p.add_argument("--p", type=int, help="blocks per side for --partition blocks")
            p.add_argument("--beta", help="Robin trace weight (number or 'auto')")
            p.add_argument("--sigma", help="Robin flux weight (number or 'auto')")
            p.add_argument("--tol", type=float)
            p.add_argument("--max-iters", type=int)
        if study_mode:
            p.add_argument("--n-list", help="comma-separated doubling mesh sizes")
            p.add_argument("--mode", choices=("monolithic", "dd"))

    p_solve = sub.add_parser("solve", help="monolithic solve with error report")
    add_shared(p_solve)
    p_solve.add_argument("--dump-system",
                         help="prefix for Matrix Market matrix + rhs vector dump")

    p_dd = sub.add_parser("dd-solve", help="domain-decomposition solve")
    add_shared(p_dd, dd=True)
    p_dd.add_argument("--trace", help="write the per-sweep trace CSV here")
    p_dd.add_argument("--plot", help="render the iteration history figure here")
    p_dd.add_argument("--reference", action="store_true",
                      help="also solve monolithically and track the difference")
    p_dd.add_argument("--timings", action="store_true",
                      help="fill the wall_ms trace column (breaks bit-for-bit "
                           "reproducibility of trace files)")

    p_study = sub.add_parser("study", help="mesh-refinement convergence study")
    add_shared(p_study, dd=True, study_mode=True)
    p_study.add_argument("--plot", help="render the convergence figure here")
    p_study.add_argument("--no-plot", action="store_true",
                         help="suppress the figure that --out renders by default")

    p_check = sub.add_parser("check", help="run the invariant suite")
    p_check.add_argument("--config", help="flat key=value configuration file")
    p_check.add_argument("--seed", type=int)
    p_check.add_argument("--workers", type=int)

    p_info = sub.add_parser("mesh-info", help="mesh statistics and export")
    add_shared(p_info, dd=True)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = dict(_DEFAULTS)
    if getattr(args, "config", None):
        values.update(_read_config_file(args.config))
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None or val is False:
            continue
        values[key] = val
    cfg = RunConfig(
        command=args.command,
        n=int(values["n"]),
        k=int(values["k"]),
        case=str(values["case"]),
        partition=str(values["partition"]),
        p=int(values["p"]),
        beta=_parse_weight(values["beta"]),
        sigma=_parse_weight(values["sigma"]),
        tol=float(values["tol"]),
        max_iters=int(values["max_iters"]),
        workers=int(values["workers"]),
        format=str(values["format"]),
        seed=int(values["seed"]),
        n_list=[int(x) for x in str(values["n_list"]).split(",") if x],
        mode=str(values["mode"]),
        mesh_in=values.get("mesh_in"),
        mesh_out=values.get("mesh_out"),
        out=values.get("out"),
        trace=values.get("trace"),
        plot=values.get("plot"),
        no_plot=bool(values.get("no_plot", False)),
        dump_system=values.get("dump_system"),
        reference=bool(values.get("reference", False)),
        timings=bool(values.get("timings", False)),
    )
    cfg.validate()
    return cfg


def _load_mesh(cfg: RunConfig):
    mesh = read_mesh(cfg.mesh_in) if cfg.mesh_in else build_uniform_mesh(cfg.n)
    if cfg.mesh_out:
        write_mesh(mesh, cfg.mesh_out)
    return mesh


def _emit(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_solve(cfg: RunConfig) -> int:
    mesh = _load_mesh(cfg)
    case = CASES[cfg.case]
    system = assemble(mesh, cfg.k, case.f, case.g)
    if cfg.dump_system:
        dump_system(system, cfg.dump_system)
    solution = solve_monolithic(system)
    errors = error_triple(solution, case, system)
    payload = {
        "schema": SCHEMA,
        "mode": "solve",
        "case": cfg.case,
        "n": mesh.structured_n,
        "k": cfg.k,
        "h_max": mesh.h_max,
        "dofs": {"dual": system.lambda_map.total, "primal": system.u_map.total},
        "errors": {"triple_bar": errors.triple_bar,
                   "e_h_l2": errors.e_h_l2,
                   "lambda0_l2": errors.lambda0_l2},
        "residual": solution.residual,
        "weak_harmonicity_max": weak_harmonicity_max(system, solution),
    }
    _emit(json.dumps(payload, indent=2) + "\n", cfg.out)
    return 0


def _cmd_dd_solve(cfg: RunConfig) -> int:
    mesh = _load_mesh(cfg)
    case = CASES[cfg.case]
    partition = build_partition(
        mesh, cfg.partition, cfg.p if cfg.partition == "blocks" else None)
    contexts = element_contexts(mesh, cfg.k)
    reference = None
    if cfg.reference:
        system = assemble(mesh, cfg.k, case.f, case.g, contexts)
        reference = solve_monolithic(system)
    params = IterationParams(beta=cfg.beta, sigma_r=cfg.sigma, tol=cfg.tol,
                             max_iters=cfg.max_iters, workers=cfg.workers,
                             reference=reference,
                             collect_timings=cfg.timings)
    report = iterate(mesh, partition, cfg.k, case.f, case.g, params, contexts)
    errors = dd_error_triple(report, case, mesh, cfg.k, contexts)
    if cfg.trace:
        Path(cfg.trace).write_text(
            format_trace_csv(report.rows, include_timings=cfg.timings))
    if cfg.plot:
        save_iteration_figure(report.rows, cfg.plot)
    payload = {
        "schema": SCHEMA,
        "mode": "dd-solve",
        "case": cfg.case,
        "n": mesh.structured_n,
        "k": cfg.k,
        "partition": cfg.partition,
        "M": partition.M,
        "beta": report.beta,
        "sigma": report.sigma_r,
        "iterations": report.iterations,
        "converged": report.converged,
        "final_weighted_residual": report.final_weighted_residual,
        "energy_defect_max": report.energy_defect_max,
        "jump_b": report.jump_b,
        "jump_n": report.jump_n,
        "mu_mismatch_b": report.mu_mismatch_b,
        "mu_mismatch_n": report.mu_mismatch_n,
        "diff_to_monolithic": report.diff_to_monolithic,
        "errors": {"triple_bar": errors.triple_bar,
                   "e_h_l2": errors.e_h_l2,
                   "lambda0_l2": errors.lambda0_l2},
    }
    _emit(json.dumps(payload, indent=2) + "\n", cfg.out)
    return 0 if report.converged else 3


def _cmd_study(cfg: RunConfig) -> int:
    case = CASES[cfg.case]
    dd_params = IterationParams(beta=cfg.beta, sigma_r=cfg.sigma, tol=cfg.tol,
                                max_iters=cfg.max_iters, workers=cfg.workers)
    table = study(case, cfg.k, cfg.n_list, mode=cfg.mode, dd_params=dd_params,
                  partition_strategy=cfg.partition,
                  partition_p=cfg.p if cfg.partition == "blocks" else None)
    _emit(format_study(table, cfg.format), cfg.out)
    plot_path = cfg.plot
    if plot_path is None and cfg.out and not cfg.no_plot:
        plot_path = str(Path(cfg.out).with_suffix(".png"))
    if plot_path:
        save_convergence_figure(table, plot_path)
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    from .checks import run_checks

    seed = args.seed if args.seed is not None else int(_DEFAULTS["seed"])
    workers = args.workers if args.workers is not None else 1
    results = run_checks(seed=seed, workers=workers)
    failed = [name for name, ok, _ in results if not ok]
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    if failed:
        print(f"check failed: invariant(s) violated: {', '.join(failed)}")
        return 1
    print(f"check passed: {len(results)} invariants hold")
    return 0


def _cmd_mesh_info(cfg: RunConfig) -> int:
    mesh = _load_mesh(cfg)
    boundary = mesh.n_boundary_edges
    lines = [
        f"vertices:       {mesh.n_vertices}",
        f"elements:       {mesh.n_elements}",
        f"edges:          {mesh.n_edges} ({boundary} boundary, "
        f"{mesh.n_edges - boundary} interior)",
        f"h_max:          {repr(mesh.h_max)}",
        f"euler (V-E+F):  {mesh.n_vertices - mesh.n_edges + mesh.n_elements}",
        f"structured n:   {mesh.structured_n}",
    ]
    if cfg.partition == "blocks" and mesh.structured_n is not None:
        partition = build_partition(mesh, "blocks", cfg.p)
    else:
        partition = build_partition(mesh, "per-element")
    n_iface_edges = sum(len(rec.edge_ids) for rec in partition.interfaces)
    lines.append(f"partition:      {cfg.partition} -> M={partition.M}, "
                 f"{len(partition.interfaces)} interface pairs, "
                 f"{n_iface_edges} interface edges")
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return _cmd_check(args)
        cfg = resolve_config(args)
        if args.command == "solve":
            return _cmd_solve(cfg)
        if args.command == "dd-solve":
            return _cmd_dd_solve(cfg)
        if args.command == "study":
            return _cmd_study(cfg)
        if args.command == "mesh-info":
            return _cmd_mesh_info(cfg)
        parser.error(f"unknown command {args.command!r}")
    except (ValueError, OSError) as exc:
        print(f"pdwg: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
