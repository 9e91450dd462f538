import json
import math

import numpy as np
import pytest

from ring_dynamics.errors import ConfigError, IoError
from scenario_runner.config import RunSettings, Scenario, load_config, validate_config
from scenario_runner.export import to_plain, write_json, write_table
from scenario_runner.planner import ScenarioPlanner
from scenario_runner.runner import ScenarioRunner


def _write(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_load_config_parses_angles_and_overrides(tmp_path):
    path = _write(tmp_path / "run.json", {
        "scenario": "evolve_exact",
        "params": {"N": 102, "alpha": 0.25, "phi": "pi/2"},
        "t_max": 50.0,
        "output_dir": str(tmp_path / "out"),
    })
    config = load_config(path, {"params": {"alpha": 0.1, "rho": None}, "dt": 0.005, "seed": None})
    assert config.scenario == Scenario.EVOLVE_EXACT
    assert config.params.phi == math.pi / 2
    assert config.params.alpha == 0.1 and config.params.rho == 1.0
    assert config.dt == 0.005 and config.seed == 0
    assert config.resolved_t_max() == 50.0


def test_missing_alpha_names_the_key(tmp_path):
    path = _write(tmp_path / "run.json", {"scenario": "evolve_exact", "params": {"N": 102}, "t_max": 10.0})
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.key == "alpha"
    assert info.value.exit_code == 2


def test_bands_runs_without_alpha():
    config = load_config(None, {"scenario": "bands", "params": {"N": 22, "rho": 0.5}})
    assert config.params.alpha == 0.0


@pytest.mark.parametrize("payload, key", [
    ({"params": {"N": 22, "alpha": 0.1}}, "scenario"),
    ({"scenario": "teleport", "params": {"N": 22, "alpha": 0.1}}, "scenario"),
    ({"scenario": "bands", "params": {"N": 22}, "colour": "red"}, "colour"),
    ({"scenario": "evolve_dde", "params": {"N": 22, "alpha": 0.1}, "t_max": -1.0}, "t_max"),
    ({"scenario": "evolve_dde", "params": {"N": 22, "alpha": 0.1, "phi": "sideways"}}, "phi"),
])
def test_invalid_configs_name_the_key(tmp_path, payload, key):
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path / "run.json", payload))
    assert info.value.key == key


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(IoError) as info:
        load_config(tmp_path / "absent.json")
    assert info.value.exit_code == 3

    broken = tmp_path / "broken.json"
    broken.write_text("{\"scenario\": ", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_config(broken)
    assert info.value.key == "config"


def test_manifest_replays_its_config(tmp_path):
    config = load_config(None, {"scenario": "spectrum", "params": {"N": 22, "alpha": 0.25},
                                "output_dir": str(tmp_path)})
    manifest = _write(tmp_path / "manifest.json", {"run_id": "run_1", "config": config.to_manifest_dict()})
    replayed = load_config(manifest)
    assert replayed == config


def test_t_max_in_loops():
    config = load_config(None, {"scenario": "evolve_dde", "params": {"N": 502, "alpha": 0.01}, "t_max_loops": 2.0})
    assert config.resolved_t_max() == pytest.approx(2 * 502 / (1 + math.sqrt(2)))


@pytest.mark.parametrize("overrides, fragment", [
    ({"scenario": "crosscheck", "params": {"N": 22, "alpha": 0.2}}, "t_max"),
    ({"scenario": "evolve_exact", "params": {"N": 22, "alpha": 0.2}, "t_max": 5.0, "dt": 0.1}, "dt * max|E|"),
    ({"scenario": "analytic", "params": {"N": 21, "alpha": 0.2}, "t_max": 5.0}, "N = 2 (mod 4)"),
    ({"scenario": "staircase", "params": {"N": 24, "alpha": 0.2}}, "staircase"),
    ({"scenario": "evolve_dde", "params": {"N": 22, "alpha": 0.2, "phi": 0.0}, "t_max": 5.0}, "phi = pi/2"),
])
def test_validate_config_rejects(overrides, fragment):
    ok, message, _ = validate_config(load_config(None, overrides))
    assert not ok
    assert fragment in message


def test_validate_config_reports_time_scales():
    ok, message, metadata = validate_config(load_config(None, {"scenario": "staircase", "params": {"N": 502, "alpha": 0.01}}))
    assert ok, message
    assert metadata["regime"] == "blockade"
    assert metadata["T_minus"] == pytest.approx(207.93, abs=0.01)


def test_settings_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("CRQ_OUT_DIR", str(tmp_path / "elsewhere"))
    monkeypatch.setenv("CRQ_CSV_DIGITS", "12")
    monkeypatch.setenv("LOG_LEVEL", "debug")
    settings = RunSettings.from_env()
    assert settings.out_dir == str(tmp_path / "elsewhere")
    assert settings.csv_digits == 12
    assert settings.log_level == "DEBUG"
    config = load_config(None, {"scenario": "bands", "params": {"N": 22}})
    assert str(config.output_dir) == str(tmp_path / "elsewhere")


def test_write_table_format(tmp_path):
    path = write_table(tmp_path / "t.csv", ["a", "b"], [np.array([0.1, 1.0]), np.array([np.nan, -2.5])])
    assert path.read_bytes() == b"a,b\n0.10000000000000001,\n1,-2.5\n"
    with pytest.raises(ValueError):
        write_table(tmp_path / "c.csv", ["z"], [np.array([1j])])


def test_write_json_is_sorted_and_plain(tmp_path):
    path = write_json(tmp_path / "p.json", {"b": np.float64(0.5), "a": [np.int64(3), 1 + 2j, float("nan")], "c": Scenario.BANDS})
    text = path.read_text(encoding="utf-8")
    assert text.endswith("\n")
    assert json.loads(text) == {"a": [3, {"re": 1.0, "im": 2.0}, None], "b": 0.5, "c": "bands"}
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert to_plain(np.array([True, False])) == [True, False]


def test_crosscheck_plan_orders_the_solvers():
    config = load_config(None, {"scenario": "crosscheck", "params": {"N": 22, "alpha": 0.2}, "t_max": 10.0})
    plan = ScenarioPlanner().create_plan(config)
    names = [step.name for step in plan.steps]
    assert names == ["bands", "exact", "kernel", "dde", "compare"]
    compare = plan.steps[-1]
    assert len(compare.dependencies) == 3


def test_reruns_write_identical_tables(tmp_path):
    runner = ScenarioRunner(RunSettings())
    outputs = []
    for name in ("first", "second"):
        config = load_config(None, {"scenario": "evolve_dde", "params": {"N": 22, "alpha": 0.2},
                                    "t_max_loops": 1.5, "output_dir": str(tmp_path / name)})
        report = runner.run(config)
        assert report["success"] and report["exit_code"] == 0
        outputs.append((tmp_path / name / "trajectory_dde.csv").read_bytes())
        manifest = json.loads((tmp_path / name / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["config"]["scenario"] == "evolve_dde"
        assert {item["path"] for item in manifest["artifacts"]} >= {"trajectory_dde.csv", "feedback_ladder.json"}
    assert outputs[0] == outputs[1]


def test_runner_reports_invalid_config_as_usage_error(tmp_path):
    config = load_config(None, {"scenario": "analytic", "params": {"N": 21, "alpha": 0.2}, "t_max": 5.0,
                                "output_dir": str(tmp_path / "never")})
    report = ScenarioRunner(RunSettings()).run(config)
    assert report["exit_code"] == 2 and not report["success"]
    assert not (tmp_path / "never").exists()


def test_marker_table_lists_loops_and_meetings():
    from ring_dynamics.lattice_bath import LatticeParams
    from scenario_runner.figures import marker_table

    rows = marker_table(LatticeParams(N=502, alpha=0.01), 600.0)
    by_kind = {}
    for kind, n, t in zip(rows["kind"], rows["n"], rows["t"]):
        by_kind.setdefault(kind, []).append((n, t))
    assert [n for n, _ in by_kind["loop_minus"]] == [1, 2]
    assert [n for n, _ in by_kind["meet"]] == [1, 2, 3]
    assert by_kind["meet"][0][1] == pytest.approx(502 / (2 * math.sqrt(2)))
    assert "loop_plus" not in by_kind


def test_seed_drives_the_density_check(tmp_path):
    runner = ScenarioRunner(RunSettings())
    checks = []
    for name, seed in (("first", 5), ("second", 5), ("third", 6)):
        config = load_config(None, {"scenario": "analytic", "params": {"N": 22, "alpha": 0.2}, "t_max_loops": 1.5,
                                    "seed": seed, "output_dir": str(tmp_path / name)})
        report = runner.run(config)
        assert report["success"], report["message"]
        step = next(step for step in report["plan"]["steps"] if step["name"] == "analytic")
        checks.append(step["output"]["density_check"])

    assert checks[0] == checks[1]
    assert checks[0]["min_eigenvalue"] != checks[2]["min_eigenvalue"]
    for check in checks:
        assert check["samples"] == 1000
        assert check["max_trace_error"] < 1e-14
        assert check["min_eigenvalue"] >= -1e-12
