import json
import math

import pandas as pd
import pytest
from typer.testing import CliRunner

from cli.crq_cli import app

runner = CliRunner()


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    monkeypatch.setenv("LOG_FILE", str(tmp_path / "logs" / "crq.log"))
    monkeypatch.setenv("CRQ_OUT_DIR", str(tmp_path / "default_out"))


def test_bands_command(tmp_path):
    out = tmp_path / "bands"
    result = runner.invoke(app, ["bands", "--n", "22", "--rho", "0.5", "--phi", "pi/2", "--out", str(out)])
    assert result.exit_code == 0, result.output

    table = pd.read_csv(out / "bands.csv")
    assert list(table.columns[:3]) == ["k", "E_minus", "E_plus"]
    assert len(table) == 22
    k_min = table["k"][(table["E_plus"] - table["E_minus"]).abs().idxmin()]
    assert abs(k_min - math.pi / 2) <= math.pi / 22 + 1e-12

    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["config"]["params"]["alpha"] == 0.0
    assert manifest["steps"][0]["status"] == "completed"


def test_missing_alpha_is_a_usage_error(tmp_path):
    result = runner.invoke(app, ["evolve-exact", "--n", "22", "--t-max", "5", "--out", str(tmp_path / "x")])
    assert result.exit_code == 2
    assert "alpha" in result.output


def test_run_with_config_file(tmp_path):
    out = tmp_path / "dde"
    config = tmp_path / "dde.json"
    config.write_text(json.dumps({
        "scenario": "evolve_dde",
        "params": {"N": 22, "alpha": 0.2, "phi": "pi/2"},
        "t_max_loops": 2.0,
        "output_stride": 10,
    }), encoding="utf-8")
    result = runner.invoke(app, ["run", "--config", str(config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    trajectory = pd.read_csv(out / "trajectory_dde.csv")
    assert list(trajectory.columns) == ["t", "eps_re", "eps_im", "abs_eps_sq", "pop_A", "pop_B", "norm_defect"]
    assert trajectory["pop_A"].isna().all()
    ladder = json.loads((out / "feedback_ladder.json").read_text(encoding="utf-8"))["ladder"]
    assert {entry["band"] for entry in ladder} == {"-", "+"}


def test_config_missing_file(tmp_path):
    result = runner.invoke(app, ["run", "--config", str(tmp_path / "nope.json")])
    assert result.exit_code == 3


def test_failed_step_sets_the_exit_code(tmp_path):
    # dt divides neither loop time, so the delay solver refuses the grid
    result = runner.invoke(app, ["evolve-dde", "--n", "22", "--alpha", "0.2", "--t-max", "20",
                                 "--dt", "0.013", "--out", str(tmp_path / "bad")])
    assert result.exit_code == 1


def test_spectrum_command(tmp_path):
    out = tmp_path / "spectrum"
    result = runner.invoke(app, ["spectrum", "--n", "26", "--alpha", "0.25", "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "spectrum.json").read_text(encoding="utf-8"))
    assert len(report["eigenvalues"]) == 53
    assert report["zero_mode_residual"] < 1e-10
    assert report["pr_formula_value"] == pytest.approx(90 ** 2 / (64 ** 2 + 26))


def test_crosscheck_command(tmp_path):
    out = tmp_path / "crosscheck"
    result = runner.invoke(app, ["crosscheck", "--n", "22", "--alpha", "0.25", "--t-max", "15", "--out", str(out)])
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "crosscheck.json").read_text(encoding="utf-8"))
    assert set(summary["deviations"]) == {"kernel_vs_exact", "dde_vs_exact", "kernel_vs_dde"}
    assert summary["deviations"]["kernel_vs_exact"] < 1e-4
    for name in ("trajectory_exact.csv", "trajectory_kernel.csv", "trajectory_dde.csv", "kernel.csv"):
        assert (out / name).exists()


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert "crq" in result.output


def test_figures_command_on_a_small_ring(tmp_path):
    out = tmp_path / "figures"
    config = tmp_path / "figures.json"
    config.write_text(json.dumps({
        "scenario": "figures",
        "params": {"N": 22, "alpha": 0.05, "phi": "pi/2"},
        "odd_N": 21,
        "output_stride": 10,
    }), encoding="utf-8")
    result = runner.invoke(app, ["run", "--config", str(config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    for name in ("revivals.csv", "blockade.csv", "transfer_populations.csv", "transfer_map.csv", "odd_ring.csv", "markers.csv"):
        assert (out / name).exists()
    sweep = pd.read_csv(out / "revivals.csv")
    assert set(sweep["alpha"]) == {0.25, 0.5}
    odd = pd.read_csv(out / "odd_ring.csv")
    assert odd["staircase_re"].iloc[0] == pytest.approx(1.0)
