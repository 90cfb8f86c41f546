import json
import subprocess
import sys

import pytest

from microclimate_mpc.cli import EXIT_DATA, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, main


def test_simulate(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", "--scenario", "tc2", "--day", "mild", "--controller", "lmpc", "--out", str(out)]) == EXIT_OK
    assert (out / "trajectory.csv").exists()
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["controller"] == "lmpc"
    assert "lmpc:" in capsys.readouterr().out


def test_simulate_disturbed(tmp_path):
    args = ["simulate", "--scenario", "tc1", "--day", "hot", "--controller", "lmpc", "--replan", "1800",
            "--disturb", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    assert (tmp_path / "a" / "metrics.json").read_bytes() == (tmp_path / "b" / "metrics.json").read_bytes()


def test_compare(tmp_path, capsys):
    assert main(["compare", "--scenario", "tc2_svs", "--day", "hot", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "summary.csv").read_text().count("\n") == 4
    for name in ("mpc", "lmpc", "onoff"):
        assert (tmp_path / name / "metrics.json").exists()


def test_horizon_study(tmp_path):
    args = ["horizon-study", "--scenario", "tc1", "--day", "hot", "--wmax-kw", "3.5", "--horizons", "2,3", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert (tmp_path / "horizons.csv").read_text().startswith("horizon_h,")


def test_uncertainty_study(tmp_path):
    args = ["uncertainty-study", "--scenario", "tc2", "--day", "mild", "--seeds", "1", "--replan", "3600", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary["mean_penalty_Kh"]) == {"mpc", "lmpc"}


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["simulate", "--scenario", "tc1", "--controller", "pid", "--out", "x"],
        ["simulate", "--scenario", "tc9", "--controller", "mpc", "--out", "x"],
        ["simulate", "--scenario", "tc1", "--controller", "mpc", "--replan", "60", "--out", "x"],
        ["horizon-study", "--scenario", "tc1", "--horizons", "2,x", "--out", "x"],
        ["uncertainty-study", "--scenario", "tc1", "--seeds", "0", "--out", "x"],
    ],
)
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == EXIT_USAGE


def test_data_error(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"base": "tc1", "params": {"V": -3}}')
    assert main(["simulate", "--scenario", str(cfg), "--controller", "onoff", "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_solver_error(tmp_path, monkeypatch):
    from microclimate_mpc import mpc
    from microclimate_mpc.lp import LpSolution

    monkeypatch.setattr(mpc, "solve_lp", lambda p: LpSolution("infeasible"))
    args = ["simulate", "--scenario", "tc1", "--controller", "lmpc", "--out", str(tmp_path)]
    assert main(args) == EXIT_SOLVER


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "microclimate_mpc", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "horizon-study" in proc.stdout
