import csv
import json
import subprocess
import sys

import pytest

from maxwell_schwarz.cli import EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, main

SMALL = "kappa = 2pi\nmesh_rule = fixed\nn = 4\nparts = 2\n"


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_solve_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = write(tmp_path, SMALL + "method = spectral\nrho = 0.3\nwrite_vtk = true\ndump_matrices = true\n")
    assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["converged"] and report["coarse_dim"] > 0
    rows = list(csv.DictReader((out / "table.csv").open()))
    assert rows[0]["method"] == "spectral" and rows[0]["status"] == "converged"
    assert int(rows[0]["iters"]) == report["iterations"]
    for name in ("solution.vtk", "A.mtx", "S_imp.mtx", "rhs.mtx"):
        assert (out / name).exists()
    assert "iterations=" in capsys.readouterr().out


def test_out_key_used_without_flag(tmp_path):
    out = tmp_path / "from_config"
    cfg = write(tmp_path, SMALL + f"method = wasi\nout = {out}\n")
    assert main(["solve", "--config", cfg]) == EXIT_OK
    assert (out / "report.json").exists()


def test_not_converged_exit_code(tmp_path):
    cfg = write(tmp_path, SMALL + "method = wasi\nmaxit = 1\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_NOT_CONVERGED
    assert json.loads((tmp_path / "o" / "report.json").read_text())["converged"] is False


@pytest.mark.parametrize("text", ["kappa = -2\n", "method = magic\n", "nonsense\n"])
def test_config_errors_exit_one(tmp_path, text, capsys):
    cfg = write(tmp_path, text)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_exit_one(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG


def test_sweep(tmp_path):
    cfg = write(tmp_path, SMALL + "method = wasi, grid\n")
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader((out / "table.csv").open()))
    assert [r["method"] for r in rows] == ["wasi", "grid"]
    assert len(json.loads((out / "report.json").read_text())["reports"]) == 2


def test_sweep_with_failure_exits_two(tmp_path):
    cfg = write(tmp_path, SMALL + "method = wasi\nmaxit = 1, 100\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")]) == EXIT_NOT_CONVERGED


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, SMALL.replace("n = 4", "n = 2") + "parts = 1\nmethod = wasi\n")
    proc = subprocess.run(
        [sys.executable, "-m", "maxwell_schwarz.cli", "solve", "--config", cfg, "--out", str(tmp_path / "m")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "converged=True" in proc.stdout


def test_shipped_configs_parse():
    from pathlib import Path

    from maxwell_schwarz.config import load_config, load_sweep

    root = Path(__file__).resolve().parents[1] / "configs"
    assert load_config(root / "solve.cfg").method == "spectral"
    assert len(load_sweep(root / "sweep.cfg")) == 8
