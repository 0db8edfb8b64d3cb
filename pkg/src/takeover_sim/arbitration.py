"""Automation-mode state machine and driver/automation input blending."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

from .dynamics import DEFAULT_STEER_MAX, ControlInput, clamp_control
from .errors import ValidationError


class AutomationMode(Enum):
    AUTO = "AUTO"
    SHARED = "SHARED"
    MANUAL = "MANUAL"


class Disengagement(Enum):
    ORDINARY = "ORDINARY"  # non-traffic cause; hazard follows 1 s after the request
    URGENT = "URGENT"      # hazard and request are simultaneous


class ArbiterSignal(Enum):
    STEADY_FOLLOWING = "STEADY_FOLLOWING"
    RESET = "RESET"


@dataclass(frozen=True)
class TorEvent:
    """A takeover request: shift authority to the driver (fully or shared)."""

    target: AutomationMode
    disengagement: Disengagement
    t_issued: float

    def __post_init__(self) -> None:
        if self.target is AutomationMode.AUTO:
            raise ValidationError("takeover request target must be SHARED or MANUAL")


ArbiterEvent = Union[TorEvent, ArbiterSignal]


@dataclass(frozen=True)
class ArbiterConfig:
    """Blending weight and steady-following thresholds.

    alpha is the automation weight in SHARED mode, fixed per drive. Steady
    following requires |v_ego - v_lead| <= dv_max and a time headway inside
    headway_range, continuously for hold seconds, before re-engaging AUTO.
    """

    alpha: float = 0.5
    dv_max: float = 0.5
    headway_range: tuple[float, float] = (1.0, 3.0)
    hold: float = 5.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha {self.alpha} outside [0, 1]")
        if not self.hold > 0:
            raise ValidationError("hold must be positive")
        lo, hi = self.headway_range
        if not (0 < lo < hi):
            raise ValidationError(f"bad headway range {self.headway_range}")


def blend(u_driver: ControlInput, u_expert: ControlInput, mode: AutomationMode,
          alpha: float, steer_max: float = DEFAULT_STEER_MAX) -> ControlInput:
    """Combine driver and automation inputs according to the current mode.

    AUTO passes the expert input through, MANUAL the driver input; SHARED is
    the component-wise convex combination alpha * expert + (1 - alpha) * driver,
    re-clamped to valid ranges.
    """
    if mode is AutomationMode.AUTO:
        return u_expert
    if mode is AutomationMode.MANUAL:
        return u_driver
    w = 1.0 - alpha
    return clamp_control(
        alpha * u_expert.throttle + w * u_driver.throttle,
        alpha * u_expert.brake + w * u_driver.brake,
        alpha * u_expert.steering + w * u_driver.steering,
        steer_max,
    )


def transition(mode: AutomationMode, event: ArbiterEvent) -> AutomationMode:
    """Total transition function of the authority state machine.

    A takeover request moves AUTO to its target; steady following re-engages
    AUTO from either takeover mode; RESET always returns to AUTO. Every other
    (mode, event) pair leaves the mode unchanged; callers treat an unchanged
    mode as an ignored event and log it.
    """
    if isinstance(event, TorEvent):
        if mode is AutomationMode.AUTO:
            return event.target
        return mode
    if event is ArbiterSignal.STEADY_FOLLOWING:
        if mode in (AutomationMode.SHARED, AutomationMode.MANUAL):
            return AutomationMode.AUTO
        return mode
    if event is ArbiterSignal.RESET:
        return AutomationMode.AUTO
    raise ValidationError(f"unknown arbiter event: {event!r}")


def tick_is_steady(gap_m: float, v_ego: float, v_lead: float, cfg: ArbiterConfig) -> bool:
    """Single-sample predicate behind steady_following."""
    if v_ego <= 0.0:
        return False
    if abs(v_ego - v_lead) > cfg.dv_max:
        return False
    headway = gap_m / v_ego
    if not math.isfinite(headway):
        return False
    lo, hi = cfg.headway_range
    return lo <= headway <= hi


def steady_following(history: Sequence[tuple[float, float, float]], cfg: ArbiterConfig,
                     dt: float = 0.05) -> bool:
    """Check for a sustained, calm car-following state.

    history holds (gap, v_ego, v_lead) samples at the simulation rate, oldest
    first. True iff the most recent cfg.hold seconds continuously satisfy all
    of: |v_ego - v_lead| <= dv_max, time headway gap / v_ego inside the
    configured range, and v_ego > 0. A history shorter than the hold window
    is never steady.
    """
    n = int(round(cfg.hold / dt))
    if n <= 0 or len(history) < n:
        return False
    recent = list(history)[-n:]
    return all(tick_is_steady(g, ve, vl, cfg) for g, ve, vl in recent)
