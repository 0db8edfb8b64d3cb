"""Constant-headway car-following law.

Used to synthesize the bundled expert recording (a decisive, safe follower
that reacts to the lead without lag) and, with gentler limits, by the
simulated driver when it re-establishes following after a takeover episode.
"""
from __future__ import annotations

from dataclasses import dataclass

from .dynamics import ControlInput, DynamicsParams


@dataclass(frozen=True)
class FollowerParams:
    """Gains and comfort limits of the follow controller.

    Inside the snap band (relative speed within snap_dv and no hard braking
    demanded) the controller switches to exact speed matching, so a recording
    settles to true zero pedals instead of an asymptotic throttle tail.
    Replayed open-loop on drag-free dynamics, a one-sided tail would otherwise
    feed surplus speed to a vehicle that is already at cruise speed.

    The speed term dominates the gap term by design: when catching up after a
    disturbance the controller rides slightly above the lead's speed while the
    gap closes, so everything it records past the immediate hazard zone is at
    or above cruise speed and the residual pedal tail is a (harmless) brake.
    """

    headway: float = 1.35        # s, desired time headway
    standstill_gap: float = 2.0  # m, desired gap at rest
    gap_gain: float = 0.49       # 1/s^2
    speed_gain: float = 8.0      # 1/s
    accel_max: float = 3.0       # m/s^2
    decel_max: float = 8.4       # m/s^2, decisive but below full braking
    snap_dv: float = 0.15        # m/s band where exact speed matching takes over
    snap_accel: float = 2.0      # m/s^2 authority inside the band


def follow_accel(gap_m: float, v_ego: float, v_lead: float, fp: FollowerParams) -> float:
    """Commanded acceleration toward the desired headway, comfort-clamped."""
    target_gap = fp.standstill_gap + fp.headway * v_ego
    a = fp.gap_gain * (gap_m - target_gap) + fp.speed_gain * (v_lead - v_ego)
    if a > fp.accel_max:
        return fp.accel_max
    if a < -fp.decel_max:
        return -fp.decel_max
    return a


def follow_accel_snapped(gap_m: float, v_ego: float, v_lead: float,
                         fp: FollowerParams, dt: float) -> float:
    """follow_accel with the equilibrium snap applied (dt resolves the exact
    speed-matching command)."""
    a = follow_accel(gap_m, v_ego, v_lead, fp)
    dv = v_lead - v_ego
    if abs(dv) <= fp.snap_dv and a > -fp.snap_accel and v_ego > 1.0:
        a = dv / dt
        if a > fp.snap_accel:
            return fp.snap_accel
        if a < -fp.snap_accel:
            return -fp.snap_accel
    return a


def pedals_for_accel(a: float, dyn: DynamicsParams) -> ControlInput:
    """Map a commanded acceleration onto throttle or brake."""
    if a >= 0.0:
        return ControlInput(min(1.0, a / dyn.a_max), 0.0, 0.0)
    return ControlInput(0.0, min(1.0, -a / dyn.b_max), 0.0)
