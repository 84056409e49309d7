import json

import numpy as np
import pytest
import scipy.io

from pdwg.cli import main
from pdwg.mesh import read_mesh


def run(args):
    return main([str(a) for a in args])


def test_solve_writes_schema_json(tmp_path):
    out = tmp_path / "solve.json"
    assert run(["solve", "--n", 4, "--k", 1, "--case", "sine",
                "--out", out]) == 0
    payload = json.loads(out.read_text())
    assert payload["schema"] == "pdwg-v1"
    assert payload["mode"] == "solve"
    errors = payload["errors"]
    assert all(errors[k] > 0 for k in ("triple_bar", "e_h_l2", "lambda0_l2"))
    assert payload["residual"] <= 1e-10
    assert payload["weak_harmonicity_max"] <= 1e-9


def test_solve_dump_system(tmp_path):
    prefix = tmp_path / "system"
    out = tmp_path / "solve.json"
    assert run(["solve", "--n", 2, "--k", 1, "--case", "sine",
                "--dump-system", prefix, "--out", out]) == 0
    K = scipy.io.mmread(f"{prefix}.mtx")
    rhs = np.loadtxt(f"{prefix}.rhs.txt")
    assert K.shape[0] == K.shape[1] == len(rhs)


def test_solve_seed_does_not_affect_output(tmp_path):
    outs = []
    for seed in (0, 12345):
        out = tmp_path / f"solve-{seed}.json"
        assert run(["solve", "--n", 4, "--k", 1, "--case", "harmonic",
                    "--seed", seed, "--out", out]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_dd_solve_trace_and_report(tmp_path):
    trace = tmp_path / "trace.csv"
    out = tmp_path / "dd.json"
    assert run(["dd-solve", "--n", 4, "--k", 1, "--case", "sine",
                "--partition", "per-element", "--tol", "1e-8",
                "--trace", trace, "--out", out]) == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == ("m,weighted_residual,stab_energy,energy_defect,"
                        "diff_to_monolithic,wall_ms")
    ws = [float(line.split(",")[1]) for line in lines[1:]]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(ws, ws[1:]))
    payload = json.loads(out.read_text())
    assert payload["converged"] is True
    assert payload["energy_defect_max"] <= 1e-9


def test_dd_solve_reference_and_plot(tmp_path):
    trace = tmp_path / "trace.csv"
    plot = tmp_path / "history.png"
    out = tmp_path / "dd.json"
    assert run(["dd-solve", "--n", 2, "--k", 1, "--case", "sine",
                "--partition", "per-element", "--tol", "1e-9",
                "--reference", "--trace", trace, "--plot", plot,
                "--out", out]) == 0
    payload = json.loads(out.read_text())
    assert payload["diff_to_monolithic"] <= 1e-6
    assert plot.stat().st_size > 0
    # reference column filled
    assert trace.read_text().splitlines()[1].split(",")[4] != ""


def test_dd_solve_worker_count_bit_identical_traces(tmp_path):
    traces = []
    for w in (1, 8):
        path = tmp_path / f"trace-{w}.csv"
        assert run(["dd-solve", "--n", 2, "--k", 1, "--case", "sine",
                    "--partition", "per-element", "--tol", "1e-9",
                    "--workers", w, "--trace", path]) == 0
        traces.append(path.read_bytes())
    assert traces[0] == traces[1]


def test_study_csv_and_default_figure(tmp_path):
    out = tmp_path / "study.csv"
    assert run(["study", "--case", "sine", "--k", 1, "--n-list", "2,4,8",
                "--format", "csv", "--out", out]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("n,h,triple_bar,eoc_triple_bar")
    assert len(lines) == 4
    assert (tmp_path / "study.png").stat().st_size > 0


def test_study_no_plot(tmp_path):
    out = tmp_path / "study.csv"
    assert run(["study", "--case", "sine", "--k", 1, "--n-list", "2,4",
                "--format", "csv", "--out", out, "--no-plot"]) == 0
    assert not (tmp_path / "study.png").exists()


def test_study_json_dd_mode(tmp_path):
    out = tmp_path / "study.json"
    assert run(["study", "--case", "sine", "--k", 1, "--n-list", "2,4",
                "--mode", "dd", "--partition", "per-element",
                "--tol", "1e-8", "--format", "json", "--out", out,
                "--no-plot"]) == 0
    payload = json.loads(out.read_text())
    assert payload["schema"] == "pdwg-v1"
    assert payload["rows"][0]["iterations"] >= 1
    assert payload["rows"][0]["converged"] is True


def test_mesh_roundtrip_through_cli(tmp_path):
    mesh_path = tmp_path / "mesh.txt"
    assert run(["mesh-info", "--n", 3, "--mesh-out", mesh_path]) == 0
    mesh = read_mesh(mesh_path)
    assert mesh.n_elements == 18
    out = tmp_path / "info.txt"
    assert run(["mesh-info", "--mesh-in", mesh_path, "--out", out]) == 0
    assert "elements:       18" in out.read_text()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n=2\nk=1\ncase=harmonic\nformat=json\n# comment\n")
    out = tmp_path / "solve.json"
    assert run(["solve", "--config", cfg, "--n", 4, "--out", out]) == 0
    payload = json.loads(out.read_text())
    assert payload["case"] == "harmonic"  # from file
    assert payload["n"] == 4              # flag wins


def test_check_passes():
    assert run(["check"]) == 0


def test_invalid_arguments_exit_nonzero(tmp_path):
    assert run(["solve", "--n", 4, "--k", 9]) == 2
    assert run(["solve", "--case", "nope"]) == 2
    assert run(["dd-solve", "--n", 3, "--partition", "blocks", "--p", 2]) == 2
