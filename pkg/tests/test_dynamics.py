import math

import pytest
from hypothesis import given, strategies as st

from takeover_sim.dynamics import (ControlInput, DynamicsParams, LeadProfile, VehicleState,
                                   gap, step_lead, step_vehicle)
from takeover_sim.errors import ValidationError

P = DynamicsParams()


def test_full_brake_from_speed():
    s1 = step_vehicle(VehicleState(v=10.0), ControlInput(brake=1.0), P, 0.1)
    assert s1.v == pytest.approx(10.0 - 9.8 * 0.1)


def test_coasting_holds_speed_exactly():
    s1 = step_vehicle(VehicleState(v=10.0), ControlInput(), P, 0.1)
    assert s1.v == 10.0
    assert s1.s == pytest.approx(1.0)


def test_exact_stop_substep():
    # v = 0.5 under full brake stops mid-step; travel is v^2 / (2 b_max)
    s1 = step_vehicle(VehicleState(v=0.5), ControlInput(brake=1.0), P, 0.1)
    assert s1.v == 0.0
    assert s1.s == pytest.approx(0.5 ** 2 / (2 * 9.8), abs=1e-12)


def test_stationary_under_brake_stays_put():
    s1 = step_vehicle(VehicleState(v=0.0, s=3.0), ControlInput(brake=1.0), P, 0.1)
    assert s1.v == 0.0
    assert s1.s == 3.0


def test_rejects_non_finite_input():
    with pytest.raises(ValidationError):
        step_vehicle(VehicleState(v=1.0), ControlInput(throttle=math.nan), P, 0.1)
    with pytest.raises(ValidationError):
        step_vehicle(VehicleState(v=1.0), ControlInput(brake=2.0), P, 0.1)
    with pytest.raises(ValidationError):
        step_vehicle(VehicleState(v=1.0), ControlInput(), P, 0.0)


def test_lateral_motion_follows_steering():
    p = DynamicsParams(lat_gain=0.5)
    s1 = step_vehicle(VehicleState(v=10.0), ControlInput(steering=1.0), p, 0.1)
    assert s1.lat == pytest.approx(0.05)


controls = st.builds(
    ControlInput,
    throttle=st.floats(0.0, 1.0),
    brake=st.floats(0.0, 1.0),
    steering=st.floats(-7.85, 7.85),
)
states = st.builds(
    VehicleState,
    s=st.floats(0.0, 1e4),
    lat=st.floats(-3.0, 3.0),
    v=st.floats(0.0, 40.0),
)


@given(states, controls, st.floats(1e-3, 1.0))
def test_never_reverses(state, u, dt):
    nxt = step_vehicle(state, u, P, dt)
    assert nxt.v >= 0.0
    assert nxt.s >= state.s


@given(states, controls, st.floats(1e-3, 1.0))
def test_step_is_pure(state, u, dt):
    assert step_vehicle(state, u, P, dt) == step_vehicle(state, u, P, dt)


@given(st.floats(0.0, 40.0), st.floats(1e-3, 1.0))
def test_coasting_is_energy_free(v, dt):
    nxt = step_vehicle(VehicleState(v=v), ControlInput(), P, dt)
    assert nxt.v == v


def _integrate_lead_to_rest(profile, dt):
    state = VehicleState(s=0.0, v=profile.v0)
    t = 0.0
    while state.v > 0.0 or t <= profile.t_brake:
        state = step_lead(profile, t, state, dt)
        t += dt
        if t > 100.0:
            raise AssertionError("lead never stopped")
    return state.s - profile.v0 * profile.t_brake


def test_lead_constant_before_brake():
    profile = LeadProfile(v0=11.11, t_brake=5.0)
    state = VehicleState(v=11.11)
    out = step_lead(profile, 1.0, state, 0.05)
    assert out.v == 11.11


def test_lead_decelerates_after_brake():
    profile = LeadProfile(v0=11.11, t_brake=5.0)
    state = VehicleState(v=11.11)
    out = step_lead(profile, 5.5, state, 0.5)
    assert out.v == pytest.approx(11.11 - 9.8 * 0.5)


@pytest.mark.parametrize("dt", [0.05, 0.02, 0.013])
def test_lead_stopping_distance_closed_form(dt):
    # travel after brake onset is v0^2 / (2 decel) regardless of tick phase
    profile = LeadProfile(v0=11.11, t_brake=0.5)
    travelled = _integrate_lead_to_rest(profile, dt)
    assert travelled == pytest.approx(11.11 ** 2 / (2 * 9.8), abs=1e-9)


def test_lead_brake_onset_mid_step_is_exact():
    profile = LeadProfile(v0=10.0, t_brake=0.075)
    state = VehicleState(s=0.0, v=10.0)
    out = step_lead(profile, 0.05, state, 0.05)
    # 0.025 s cruise then 0.025 s braking
    expected_v = 10.0 - 9.8 * 0.025
    expected_s = 10.0 * 0.025 + 10.0 * 0.025 - 0.5 * 9.8 * 0.025 ** 2
    assert out.v == pytest.approx(expected_v)
    assert out.s == pytest.approx(expected_s)


def test_gap_examples():
    ego = VehicleState(s=100.0)
    assert gap(ego, VehicleState(s=130.0)) == pytest.approx(25.5)
    assert gap(ego, VehicleState(s=104.5)) == pytest.approx(0.0)
    assert gap(ego, VehicleState(s=103.0)) == pytest.approx(-1.5)


def test_gap_different_lane_is_no_leader():
    assert gap(VehicleState(s=0.0), VehicleState(s=30.0, lane=1)) is None
