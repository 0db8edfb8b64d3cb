import dataclasses

import pytest

from takeover_sim.arbitration import AutomationMode, Disengagement
from takeover_sim.errors import ConfigError
from takeover_sim.scenario import (TorSpec, counterbalance, load_scenario, make_routes,
                                   oracle_scenario, scenario_from_dict, spec_hash)


def test_routes_differ_only_in_trigger_positions():
    a, b = make_routes()
    assert [e.trigger_s for e in a.tor_events] != [e.trigger_s for e in b.tor_events]
    strip = lambda spec: dataclasses.replace(spec, name="", tor_events=())
    assert strip(a) == strip(b)
    a_rest = [dataclasses.replace(e, trigger_s=0.0) for e in a.tor_events]
    b_rest = [dataclasses.replace(e, trigger_s=0.0) for e in b.tor_events]
    assert a_rest == b_rest


def test_routes_validate_and_hash_differently():
    a, b = make_routes()
    assert a.n_ticks == 4800 and b.n_ticks == 4800
    assert len(a.tor_events) == 2
    assert spec_hash(a) != spec_hash(b)


def test_bundled_scenario_files_match_canonical_routes():
    a, b = make_routes()
    assert spec_hash(load_scenario("scenarios/route_a.toml")) == spec_hash(a)
    assert spec_hash(load_scenario("scenarios/route_b.toml")) == spec_hash(b)


def test_counterbalance_orders():
    drives = ["d1", "d2", "d3", "d4", "d5"]
    assert counterbalance(drives, 1) == drives
    assert counterbalance(drives, 2) == list(reversed(drives))
    assert sorted(counterbalance(drives, 1)) == sorted(counterbalance(drives, 2))


def test_counterbalance_validation():
    with pytest.raises(ConfigError):
        counterbalance([], 1)
    with pytest.raises(ConfigError):
        counterbalance(["d1"], 3)


def test_with_strategy_retargets_events():
    a, _ = make_routes()
    manual = a.with_strategy(AutomationMode.MANUAL, Disengagement.URGENT)
    assert all(e.target is AutomationMode.MANUAL for e in manual.tor_events)
    assert all(e.disengagement is Disengagement.URGENT for e in manual.tor_events)
    assert manual.name != a.name


def test_tor_spec_needs_exactly_one_trigger():
    with pytest.raises(ConfigError):
        TorSpec(target=AutomationMode.SHARED, disengagement=Disengagement.ORDINARY)
    with pytest.raises(ConfigError):
        TorSpec(target=AutomationMode.SHARED, disengagement=Disengagement.ORDINARY,
                trigger_s=1.0, trigger_t=1.0)


def _base_dict():
    return {
        "name": "t", "route_length": 1000.0,
        "ego_init": {"s": 0.0, "v": 11.11},
        "lead_init": {"s": 20.0, "v": 11.11},
        "tor_events": [{"target": "SHARED", "disengagement": "ORDINARY", "trigger_s": 100.0}],
    }


def test_scenario_from_dict_defaults():
    spec = scenario_from_dict(_base_dict())
    assert spec.dt == 0.05
    assert spec.duration == 240.0
    assert spec.lead_brake.decel == 9.8
    assert spec.lead_brake.ordinary_offset == 1.0
    assert spec.lead_brake.urgent_offset == 0.0


def test_scenario_validation_errors():
    bad = _base_dict()
    bad["lead_init"]["v"] = 20.0  # outside 30-50 km/h
    with pytest.raises(ConfigError):
        scenario_from_dict(bad)

    bad = _base_dict()
    bad["lead_init"]["s"] = 2.0  # overlapping start
    with pytest.raises(ConfigError):
        scenario_from_dict(bad)

    bad = _base_dict()
    bad["tor_events"] = [
        {"target": "SHARED", "disengagement": "ORDINARY", "trigger_s": 200.0},
        {"target": "SHARED", "disengagement": "URGENT", "trigger_s": 100.0},
    ]
    with pytest.raises(ConfigError, match="ordered"):
        scenario_from_dict(bad)

    with pytest.raises(ConfigError):
        load_scenario("scenarios/does_not_exist.toml")


def test_oracle_scenario_initial_gap():
    spec = oracle_scenario(gap=15.0)
    assert (spec.lead_init.s - spec.ego_init.s) - spec.lead_length == pytest.approx(15.0)
    assert spec.tor_events[0].trigger_t == 0.0


def test_ambient_speed_bounds():
    bad = _base_dict()
    bad["ambient"] = [{"lane": 1, "s": 50.0, "v": 20.0}]
    with pytest.raises(ConfigError, match="ambient"):
        scenario_from_dict(bad)
