"""Longitudinal-dominant vehicle kinematics on a lane-based corridor.

Point-mass model with linear pedal-to-acceleration maps, no drag (coasting
holds speed), and an exact stop-time sub-step so braking never produces
reverse motion. All steps are pure functions: same inputs, identical output
bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ValidationError

DEFAULT_STEER_MAX = 7.85  # rad of steering wheel travel (~450 degrees)
DEFAULT_VEHICLE_LENGTH = 4.5  # m


@dataclass(frozen=True)
class ControlInput:
    """Normalized pedal forces and steering wheel angle."""

    throttle: float = 0.0
    brake: float = 0.0
    steering: float = 0.0


ZERO_INPUT = ControlInput(0.0, 0.0, 0.0)


def validate_control(u: ControlInput, steer_max: float = DEFAULT_STEER_MAX) -> None:
    """Reject non-finite or out-of-range control values."""
    if not (math.isfinite(u.throttle) and math.isfinite(u.brake) and math.isfinite(u.steering)):
        raise ValidationError(f"non-finite control input: {u}")
    if not 0.0 <= u.throttle <= 1.0:
        raise ValidationError(f"throttle {u.throttle} outside [0, 1]")
    if not 0.0 <= u.brake <= 1.0:
        raise ValidationError(f"brake {u.brake} outside [0, 1]")
    if not -steer_max <= u.steering <= steer_max:
        raise ValidationError(f"steering {u.steering} outside [{-steer_max}, {steer_max}]")


def clamp_control(throttle: float, brake: float, steering: float,
                  steer_max: float = DEFAULT_STEER_MAX) -> ControlInput:
    """Build a ControlInput with each component clamped to its valid range."""
    return ControlInput(
        min(1.0, max(0.0, throttle)),
        min(1.0, max(0.0, brake)),
        min(steer_max, max(-steer_max, steering)),
    )


@dataclass(frozen=True)
class VehicleState:
    """Kinematic state of one vehicle along the route centerline.

    s is arc position (monotone nondecreasing), lat the signed lateral offset
    from lane center, v the speed (never negative), a the last applied
    acceleration.
    """

    s: float = 0.0
    lat: float = 0.0
    v: float = 0.0
    a: float = 0.0
    lane: int = 0
    length: float = DEFAULT_VEHICLE_LENGTH


@dataclass(frozen=True)
class DynamicsParams:
    """Pedal-to-acceleration mapping.

    b_max defaults to 9.8 m/s^2 so a full brake press can match the lead
    vehicle's emergency deceleration. lat_gain of None selects the default
    speed-proportional gain 0.3 * v / steer_max.
    """

    a_max: float = 3.0
    b_max: float = 9.8
    lat_gain: float | None = None
    steer_max: float = DEFAULT_STEER_MAX

    def __post_init__(self) -> None:
        if not (self.a_max > 0 and self.b_max > 0):
            raise ValidationError("a_max and b_max must be positive")


@dataclass(frozen=True)
class LeadProfile:
    """Scripted lead vehicle: cruise at v0, then brake to rest at t_brake."""

    v0: float
    t_brake: float
    decel: float = 9.8

    def __post_init__(self) -> None:
        if not (math.isfinite(self.v0) and self.v0 >= 0):
            raise ValidationError("lead v0 must be finite and non-negative")
        if self.decel <= 0:
            raise ValidationError("lead decel must be positive")


def advance(s: float, v: float, accel: float, dt: float) -> tuple[float, float]:
    """Exact constant-acceleration update with standstill clamping.

    When deceleration would cross v = 0 inside the step, integration stops at
    the exact stop time, so the travelled distance is v^2 / (2|a|) and the
    vehicle never reverses.
    """
    if accel < 0.0:
        t_stop = -v / accel
        if t_stop <= dt:
            return s + v * t_stop + 0.5 * accel * t_stop * t_stop, 0.0
    v_next = v + accel * dt
    return s + v * dt + 0.5 * accel * dt * dt, v_next


def lateral_gain(v: float, p: DynamicsParams) -> float:
    return p.lat_gain if p.lat_gain is not None else 0.3 * v / p.steer_max


def step_vehicle(state: VehicleState, u: ControlInput, p: DynamicsParams, dt: float) -> VehicleState:
    """Advance one vehicle by dt under a fixed control input."""
    if not (math.isfinite(dt) and dt > 0):
        raise ValidationError(f"dt must be positive and finite, got {dt}")
    validate_control(u, p.steer_max)
    accel = u.throttle * p.a_max - u.brake * p.b_max
    s, v = advance(state.s, state.v, accel, dt)
    lat = state.lat + lateral_gain(state.v, p) * u.steering * dt
    return replace(state, s=s, v=v, a=accel, lat=lat)


def step_lead(profile: LeadProfile, t: float, state: VehicleState, dt: float) -> VehicleState:
    """Advance the scripted lead vehicle from time t by dt.

    Cruises until t_brake, then decelerates at -decel to rest and holds.
    A step straddling t_brake is split at the exact onset so stopping
    distance matches the closed form v0^2 / (2 decel).
    """
    if not (math.isfinite(dt) and dt > 0):
        raise ValidationError(f"dt must be positive and finite, got {dt}")
    t_end = t + dt
    s, v = state.s, state.v
    if t_end <= profile.t_brake:
        return replace(state, s=s + v * dt, v=v, a=0.0)
    if t < profile.t_brake:
        s += v * (profile.t_brake - t)
        brake_dt = t_end - profile.t_brake
    else:
        brake_dt = dt
    v_before = v
    s, v = advance(s, v, -profile.decel, brake_dt)
    a = -profile.decel if v_before > 0.0 else 0.0
    return replace(state, s=s, v=v, a=a)


def gap(ego: VehicleState, lead: VehicleState) -> float | None:
    """Bumper-to-bumper gap; negative means overlap (collision).

    Returns None when the two vehicles are in different lanes (no leader).
    """
    if ego.lane != lead.lane:
        return None
    return (lead.s - ego.s) - lead.length
