"""Machine-readable outputs: rate tables, iteration traces, figures.

All text output formats floats with repr (shortest round-trip), so
identical runs produce byte-identical files.  Figures are rendered with
the Agg backend straight to disk.
"""

import json
import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

SCHEMA = "pdwg-v1"

TRACE_COLUMNS = ("m", "weighted_residual", "stab_energy", "energy_defect",
                 "diff_to_monolithic", "wall_ms")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return value


def study_columns(table) -> list:
    """Flatten a StudyTable into (header, rows-of-values)."""
    header = ["n", "h", "triple_bar", "eoc_triple_bar", "e_h_l2", "eoc_e_h",
              "lambda0_l2", "eoc_lambda0"]
    dd = table.mode == "dd"
    if dd:
        header += ["iterations", "energy_defect", "converged"]
    out = []
    for i, row in enumerate(table.rows):
        rate = (lambda rates: None if i == 0 else rates[i - 1])
        vals = [row.n, row.h,
                row.errors.triple_bar, rate(table.rates_triple_bar),
                row.errors.e_h_l2, rate(table.rates_e_h),
                row.errors.lambda0_l2, rate(table.rates_lambda0)]
        if dd:
            vals += [row.iterations, row.energy_defect, row.converged]
        out.append(vals)
    return [header] + out


def format_study_csv(table) -> str:
    rows = study_columns(table)
    return "\n".join(",".join(_fmt(v) for v in row) for row in rows) + "\n"


def format_study_text(table) -> str:
    rows = study_columns(table)
    cells = [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(r[c]) for r in cells) for c in range(len(cells[0]))]
    lines = [f"case={table.case} k={table.k} mode={table.mode}"]
    for r in cells:
        lines.append("  ".join(v.rjust(w) for v, w in zip(r, widths)))
    return "\n".join(lines) + "\n"


def format_study_json(table) -> str:
    header, *rows = study_columns(table)
    payload = {
        "schema": SCHEMA,
        "mode": "study",
        "case": table.case,
        "k": table.k,
        "study_mode": table.mode,
        "rows": [dict(zip(header, (_json_safe(v) for v in row))) for row in rows],
    }
    return json.dumps(payload, indent=2) + "\n"


def format_study(table, fmt: str) -> str:
    if fmt == "csv":
        return format_study_csv(table)
    if fmt == "text":
        return format_study_text(table)
    if fmt == "json":
        return format_study_json(table)
    raise ValueError(f"unknown format {fmt!r}")


def format_trace_csv(rows, include_timings: bool = False) -> str:
    """Iteration trace CSV.

    The wall_ms column is left empty unless timings were requested, so
    repeated runs produce byte-identical traces.
    """
    lines = [",".join(TRACE_COLUMNS)]
    for row in rows:
        wall = row.wall_ms if include_timings else None
        lines.append(",".join(_fmt(v) for v in (
            row.m, row.weighted_residual, row.stab_energy, row.energy_defect,
            row.diff_to_monolithic, wall)))
    return "\n".join(lines) + "\n"


def save_convergence_figure(table, path) -> None:
    """Log-log error-versus-h plot with the tracked quantities."""
    hs = [row.h for row in table.rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    plotted = False
    for label, pick in (("stabilizer seminorm", lambda e: e.triple_bar),
                        ("primal L2 error", lambda e: e.e_h_l2),
                        ("dual interior L2", lambda e: e.lambda0_l2)):
        vals = [pick(row.errors) for row in table.rows]
        if all(v > 0 for v in vals):
            ax.loglog(hs, vals, "o-", label=label)
            plotted = True
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.set_title(f"{table.case}, k={table.k}, {table.mode}")
    ax.grid(True, which="both", alpha=0.3)
    if plotted:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_iteration_figure(rows, path) -> None:
    """Semilog history of the exchange iteration diagnostics."""
    ms = [row.m for row in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    plotted = False
    for label, pick in (("weighted residual (increments)",
                         lambda r: r.weighted_residual),
                        ("stabilizer energy (increments)",
                         lambda r: r.stab_energy),
                        ("difference to monolithic",
                         lambda r: r.diff_to_monolithic)):
        vals = [pick(row) for row in rows]
        if any(v is None for v in vals):
            continue
        positive = [(m, v) for m, v in zip(ms, vals) if v > 0]
        if positive:
            ax.semilogy([m for m, _ in positive], [v for _, v in positive],
                        label=label)
            plotted = True
    ax.set_xlabel("sweep")
    ax.grid(True, which="both", alpha=0.3)
    if plotted:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
