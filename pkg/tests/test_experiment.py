import json

import pytest

from takeover_sim.arbitration import AutomationMode, Disengagement
from takeover_sim.driver import DEFAULT_RT_GRID, DriverParams
from takeover_sim.errors import ConfigError
from takeover_sim.experiment import (ExperimentConfig, cell_seed, experiment_from_dict,
                                     load_experiment, run_experiment)


def _config(n_drivers=2, **kwargs):
    drivers = tuple((f"d{i}", DriverParams(rt=DEFAULT_RT_GRID[i % len(DEFAULT_RT_GRID)]))
                    for i in range(n_drivers))
    defaults = dict(drivers=drivers, routes=("route_a",), repetitions=1, seed=3)
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


def test_cross_product_counts(tmp_path):
    # 6 drivers x 2 strategies x 2 disengagements x 1 rep -> 24 logs + reports
    cfg = _config(n_drivers=6)
    summary = run_experiment(cfg, out_dir=tmp_path)
    logs = list((tmp_path / "logs").glob("*.jsonl"))
    assert len(logs) == 24
    assert summary["n_drives"] == 24
    report_lines = (tmp_path / "reports.csv").read_text().strip().split("\n")
    assert len(report_lines) == 25  # header + 24 rows
    assert (tmp_path / "summary.json").exists()
    assert (tmp_path / "groups.csv").exists()


def test_rerun_is_byte_identical(tmp_path):
    cfg = _config(n_drivers=2)
    run_experiment(cfg, out_dir=tmp_path / "one")
    run_experiment(cfg, out_dir=tmp_path / "two")
    for name in ("reports.csv", "groups.csv", "summary.json"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
    logs_one = sorted((tmp_path / "one" / "logs").iterdir())
    logs_two = sorted((tmp_path / "two" / "logs").iterdir())
    assert [p.name for p in logs_one] == [p.name for p in logs_two]
    for a, b in zip(logs_one, logs_two):
        assert a.read_bytes() == b.read_bytes()


def test_parallel_run_matches_serial(tmp_path):
    cfg = _config(n_drivers=2, disengagements=(Disengagement.URGENT,))
    run_experiment(cfg, out_dir=tmp_path / "serial", threads=1)
    run_experiment(cfg, out_dir=tmp_path / "parallel", threads=2)
    for name in ("reports.csv", "groups.csv", "summary.json"):
        assert ((tmp_path / "serial" / name).read_bytes()
                == (tmp_path / "parallel" / name).read_bytes())
    for a, b in zip(sorted((tmp_path / "serial" / "logs").iterdir()),
                    sorted((tmp_path / "parallel" / "logs").iterdir())):
        assert a.read_bytes() == b.read_bytes()


def test_summary_structure(tmp_path):
    cfg = _config(n_drivers=2)
    summary = run_experiment(cfg, out_dir=tmp_path)
    assert set(summary["conditions"]) == {
        "SHARED|ORDINARY", "SHARED|URGENT", "MANUAL|ORDINARY", "MANUAL|URGENT"}
    cond = summary["conditions"]["SHARED|ORDINARY"]
    assert cond["n"] == 2
    assert {"mean", "min", "q1", "median", "q3", "max"} <= set(cond["min_ttc"])
    assert set(summary["groups"]) == {"ORDINARY", "URGENT"}
    for rows in summary["groups"].values():
        assert len(rows) == 2
        for row in rows:
            assert row["group"] in (1, 2, 3)
    tests = summary["t_tests"]["URGENT"]
    assert tests["min_ttc"] is None or {"t", "df", "p"} <= set(tests["min_ttc"])
    plan = summary["counterbalanced_plan"]
    assert plan["group_1"] == list(reversed(plan["group_2"]))
    assert sorted(plan["group_1"]) == sorted(plan["group_2"])


def test_output_files_round_trip(tmp_path):
    """Export -> parse -> re-export reproduces every output byte-for-byte."""
    cfg = _config(n_drivers=2)
    run_experiment(cfg, out_dir=tmp_path)

    summary_text = (tmp_path / "summary.json").read_text()
    reparsed = json.dumps(json.loads(summary_text), sort_keys=True, indent=1) + "\n"
    assert reparsed == summary_text

    for name in ("reports.csv", "groups.csv"):
        text = (tmp_path / name).read_text()
        lines = text.strip().split("\n")
        rebuilt = [lines[0]]
        for line in lines[1:]:
            fields = []
            for cell in line.split(","):
                try:
                    fields.append(repr(float(cell)) if ("." in cell or cell in ("inf",))
                                  else cell)
                except ValueError:
                    fields.append(cell)
            rebuilt.append(",".join(fields))
        assert "\n".join(rebuilt) + "\n" == text

    from takeover_sim.drivelog import from_jsonl, to_jsonl
    for log_path in (tmp_path / "logs").glob("*.jsonl"):
        text = log_path.read_text()
        assert to_jsonl(from_jsonl(text)) == text


def test_missing_route_fails_before_writing(tmp_path):
    cfg = _config(routes=("no_such_route.toml",))
    out = tmp_path / "out"
    with pytest.raises(ConfigError):
        run_experiment(cfg, out_dir=out)
    assert not out.exists() or not any(out.rglob("*"))


def test_seed_changes_cell_seeds():
    a = cell_seed(1, "d1", AutomationMode.SHARED, Disengagement.URGENT, 0)
    b = cell_seed(2, "d1", AutomationMode.SHARED, Disengagement.URGENT, 0)
    c = cell_seed(1, "d2", AutomationMode.SHARED, Disengagement.URGENT, 0)
    assert len({a, b, c}) == 3


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(drivers=())
    with pytest.raises(ConfigError):
        _config(repetitions=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(drivers=(("d1", DriverParams()), ("d1", DriverParams())))


def test_toml_round_trip(tmp_path):
    toml = """
routes = ["route_a"]
strategies = ["SHARED", "MANUAL"]
disengagements = ["URGENT"]
repetitions = 2
seed = 11
theta = 2.5
out = "exp_out"

[[drivers]]
id = "p1"
rt = 0.8

[[drivers]]
id = "p2"
rt = 1.6
noise_seed = 4
"""
    path = tmp_path / "exp.toml"
    path.write_text(toml)
    cfg = load_experiment(path)
    assert cfg.seed == 11
    assert cfg.theta == 2.5
    assert cfg.repetitions == 2
    assert cfg.disengagements == (Disengagement.URGENT,)
    assert cfg.drivers[1][1].noise_seed == 4
    assert cfg.n_drives == 2 * 2 * 1 * 2


def test_bad_config_dict():
    with pytest.raises(ConfigError):
        experiment_from_dict({"drivers": [{"id": "x"}]})  # missing rt
    with pytest.raises(ConfigError):
        experiment_from_dict({"drivers": [{"id": "x", "rt": 1.0}],
                              "strategies": ["BOGUS"]})
