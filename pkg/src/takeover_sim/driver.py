"""Parameterized simulated driver for headless takeover experiments.

The takeover response is a ramp-to-target braking template anchored at the
request time plus a reaction time, which keeps the safety outcome analytically
checkable: nothing happens before tor + rt, then brake force ramps linearly to
a target and holds until the situation is safe again.

driver_input is that template as a pure per-tick function, exactly as
contracted. SimulatedDriver wraps it in a small per-episode phase machine and
adds a recovery-following phase after release, so that a drive with several
takeover events can re-establish steady car-following (and hence re-engage
automation) between episodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arbitration import TorEvent
from .dynamics import ControlInput, DynamicsParams, ZERO_INPUT
from .errors import ValidationError

# Recovery-phase constants (artifact values, not part of DriverParams).
# The catch-up overspeed tapers to zero as the time headway drops toward the
# steady-following band, so automation re-engages with ~zero relative speed;
# any residual would persist forever under drag-free replay automation.
RECOVERY_SPEED_GAIN = 2.0       # 1/s
RECOVERY_ACCEL_MAX = 3.0        # m/s^2
RECOVERY_BRAKE_CAP = 0.15       # max trim braking while re-following
RECOVERY_OVERSPEED = 0.45       # m/s peak closing speed during catch-up
RECOVERY_TAPER_HEADWAY = 3.0    # s, headway at which the overspeed reaches zero
RECOVERY_TAPER_WIDTH = 0.6      # s of headway over which the taper ramps
REBRAKE_DV = 0.5                # m/s closing speed that re-triggers the template
REBRAKE_GAP = 7.0               # m

DEFAULT_RT_GRID = (0.4, 0.8, 1.2, 1.6, 2.0, 2.4)  # s, spans observed human range


@dataclass(frozen=True)
class DriverParams:
    """Takeover-response template parameters of one simulated participant."""

    rt: float = 1.2            # s, brake reaction time after the request
    ramp: float = 2.0          # 1/s, brake application rate
    target_brake: float = 0.9  # normalized force the ramp saturates at
    release_gap: float = 15.0  # m, gap above which the driver eases off
    noise_seed: int = 0        # 0 = noiseless

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rt) and self.rt >= 0):
            raise ValidationError("rt must be finite and non-negative")
        if not self.ramp > 0:
            raise ValidationError("ramp must be positive")
        if not 0.0 < self.target_brake <= 1.0:
            raise ValidationError("target_brake must be in (0, 1]")
        if not math.isfinite(self.release_gap):
            raise ValidationError("release_gap must be finite")


Percept = tuple[float, float, float]  # (gap, v_ego, v_lead)


def driver_input(p: DriverParams, t: float, tor: TorEvent | None,
                 percept: Percept) -> ControlInput:
    """Pure takeover-response template.

    All-zero while monitoring (no request yet, or the reaction time has not
    elapsed). From tor.t_issued + rt the brake ramps at p.ramp toward
    p.target_brake; once the gap exceeds release_gap while not closing
    (v_ego <= v_lead) the brake releases to zero. Noise-free: per-tick brake
    noise is applied by SimulatedDriver when noise_seed is nonzero.
    """
    if tor is None or t < tor.t_issued + p.rt:
        return ZERO_INPUT
    gap_m, v_ego, v_lead = percept
    if gap_m > p.release_gap and v_ego <= v_lead:
        return ZERO_INPUT
    brake = min(p.target_brake, max(0.0, p.ramp * (t - tor.t_issued - p.rt)))
    return ControlInput(0.0, brake, 0.0)


class SimulatedDriver:
    """Stateful per-drive participant built on the braking template.

    Phases per takeover episode: WAITING (zeros until tor + rt), BRAKING (the
    driver_input template), RECOVERING after release (gentle car-following to
    restore steady headway so automation can re-engage). RECOVERING falls back
    to BRAKING if the gap collapses or the lead drops more than REBRAKE_DV
    below the ego speed, so a hazard arriving after a premature release is
    still answered immediately.
    """

    def __init__(self, params: DriverParams, dyn: DynamicsParams,
                 drive_seed: int = 0) -> None:
        self.p = params
        self.dyn = dyn
        self._braking = False
        self._episode: float | None = None
        self._rng = None
        if params.noise_seed:
            self._rng = np.random.default_rng((params.noise_seed, drive_seed))

    def control(self, t: float, tor: TorEvent | None, percept: Percept) -> ControlInput:
        if tor is None:
            self._episode = None
            self._braking = False
            return ZERO_INPUT
        if self._episode != tor.t_issued:
            self._episode = tor.t_issued
            self._braking = True
        if t < tor.t_issued + self.p.rt:
            return ZERO_INPUT
        gap_m, v_ego, v_lead = percept
        if self._braking:
            if gap_m > self.p.release_gap and v_ego <= v_lead:
                self._braking = False  # released; resume following
        elif gap_m <= REBRAKE_GAP or (v_ego - v_lead) > REBRAKE_DV:
            self._braking = True
        if self._braking:
            u = driver_input(self.p, t, tor, percept)
            if self._rng is not None and u.brake > 0.0:
                jitter = 1.0 + 0.05 * float(self._rng.uniform(-1.0, 1.0))
                u = ControlInput(0.0, min(1.0, max(0.0, u.brake * jitter)), 0.0)
            return u
        return self._recover(gap_m, v_ego, v_lead)

    def _recover(self, gap_m: float, v_ego: float, v_lead: float) -> ControlInput:
        # Speed governor: chase v_lead plus a headway-tapered closing margin.
        if v_ego > 0.0:
            headway = gap_m / v_ego
            frac = (headway - RECOVERY_TAPER_HEADWAY) / RECOVERY_TAPER_WIDTH
            margin = RECOVERY_OVERSPEED * min(1.0, max(0.0, frac))
        else:
            margin = RECOVERY_OVERSPEED
        a = RECOVERY_SPEED_GAIN * (v_lead + margin - v_ego)
        a = min(RECOVERY_ACCEL_MAX, a)
        if a >= 0.0:
            return ControlInput(min(1.0, a / self.dyn.a_max), 0.0, 0.0)
        return ControlInput(0.0, min(RECOVERY_BRAKE_CAP, -a / self.dyn.b_max), 0.0)
