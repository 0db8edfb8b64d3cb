"""Fixed-step drive execution: the single engine behind headless runs, the
live session server, and the synthetic expert recorder.

A drive starts in AUTO. Each tick: transitions are applied (takeover requests
fire, steady following re-engages automation), the driver and expert inputs
are read, blended per mode, and the vehicles advance. Everything is
bit-deterministic for fixed (spec, driver, config, trace, seed).
"""
from __future__ import annotations

import math
from typing import Callable, Sequence, Union

from .arbitration import (ArbiterConfig, ArbiterSignal, AutomationMode, TorEvent,
                          blend, tick_is_steady, transition)
from .driver import DriverParams, SimulatedDriver
from .drivelog import DriveLog, _MODE_CODE
from .dynamics import (ControlInput, DynamicsParams, ZERO_INPUT, advance,
                       clamp_control, lateral_gain)
from .errors import ConfigError
from .expert import ExpertTrace, ExpertTraceSample, MatchConfig, match_index
from .follower import FollowerParams, follow_accel_snapped, pedals_for_accel
from .scenario import ScenarioSpec, TorSpec, spec_hash

DEFAULT_SUB_STEPS = 4

DriverSource = Union[DriverParams, Sequence[ControlInput],
                     Callable[[float, TorEvent | None, tuple[float, float, float]], ControlInput]]


class LeadController:
    """Piecewise-exact lead vehicle: cruise, scripted emergency brakes to a
    stop, a dwell, then acceleration back to cruise speed.

    Phase boundaries (brake onset, exact stop time, dwell end, return to v0)
    are honored inside a step, so stopping distance matches closed-form
    kinematics regardless of tick phase.
    """

    _CRUISE, _BRAKING, _STOPPED, _RESUMING = range(4)

    def __init__(self, s0: float, v0: float, decel: float,
                 resume_delay: float, resume_accel: float) -> None:
        self.s = s0
        self.v = v0
        self.v0 = v0
        self.decel = decel
        self.resume_delay = resume_delay
        self.resume_accel = resume_accel
        self.a = 0.0
        self._phase = self._CRUISE
        self._dwell_until = math.inf
        self._onsets: list[float] = []  # pending brake onset times, FIFO

    def schedule_brake(self, t_onset: float) -> None:
        self._onsets.append(t_onset)

    def step(self, t: float, dt: float) -> None:
        now = t
        end = t + dt
        while True:
            remaining = end - now
            if remaining <= 0.0:
                break
            if self._phase == self._CRUISE:
                onset = self._onsets[0] if self._onsets else math.inf
                if onset >= end:
                    self.s += self.v * remaining
                    self.a = 0.0
                    break
                self.s += self.v * max(0.0, onset - now)
                now = max(now, onset)
                self._onsets.pop(0)
                self._phase = self._BRAKING
            elif self._phase == self._BRAKING:
                if self._onsets and self._onsets[0] <= now:
                    self._onsets.pop(0)  # already braking; absorb
                t_stop = self.v / self.decel
                if t_stop > remaining:
                    self.s, self.v = advance(self.s, self.v, -self.decel, remaining)
                    self.a = -self.decel
                    break
                self.s += self.v * self.v / (2.0 * self.decel)
                self.v = 0.0
                now += t_stop
                self._phase = self._STOPPED
                self._dwell_until = now + self.resume_delay
            elif self._phase == self._STOPPED:
                onset = self._onsets[0] if self._onsets else math.inf
                boundary = min(self._dwell_until, onset)
                if boundary >= end:
                    self.a = 0.0
                    break
                now = max(now, boundary)
                if onset <= self._dwell_until:
                    # new emergency while at rest: restart the dwell
                    self._onsets.pop(0)
                    self._dwell_until = now + self.resume_delay
                else:
                    self._phase = self._RESUMING
            else:  # RESUMING
                onset = self._onsets[0] if self._onsets else math.inf
                t_full = (self.v0 - self.v) / self.resume_accel
                boundary = min(now + t_full, onset)
                if boundary >= end:
                    self.s, self.v = advance(self.s, self.v, self.resume_accel, remaining)
                    self.a = self.resume_accel
                    break
                seg = boundary - now
                if seg > 0:
                    self.s, self.v = advance(self.s, self.v, self.resume_accel, seg)
                now = boundary
                if onset <= now:
                    self._onsets.pop(0)
                    self._phase = self._BRAKING
                else:
                    self.v = self.v0
                    self._phase = self._CRUISE


def _tor_triggered(ev: TorSpec, t: float, ego_s: float) -> bool:
    if ev.trigger_s is not None:
        return ego_s >= ev.trigger_s
    return t >= ev.trigger_t


class Simulation:
    """One drive advanced tick by tick.

    Call begin_tick() (transitions fire), read percept/active_tor to produce a
    driver input, then finish_tick(u_driver). The session server and run_drive
    both go through this class, so their physics paths are identical.
    """

    def __init__(self, spec: ScenarioSpec, trace: ExpertTrace,
                 arb_cfg: ArbiterConfig | None = None,
                 match_cfg: MatchConfig | None = None,
                 dyn: DynamicsParams | None = None,
                 seed: int = 0, driver_id: str = "",
                 sub_steps: int = DEFAULT_SUB_STEPS) -> None:
        self.spec = spec
        self.trace = trace
        self.arb = arb_cfg or ArbiterConfig()
        self.match_cfg = match_cfg or MatchConfig()
        self.dyn = dyn or DynamicsParams()
        self.sub_steps = sub_steps
        covers_time = trace._t[-1] + spec.dt >= spec.duration - 1e-9
        covers_route = trace._s[-1] >= spec.route_length
        if not (covers_time or covers_route):
            raise ConfigError(
                f"expert trace ({trace._t[-1]:.1f} s, {trace._s[-1]:.0f} m) does not cover "
                f"scenario {spec.name!r} ({spec.duration:.1f} s, {spec.route_length:.0f} m)")
        self.mode = AutomationMode.AUTO
        self.active_tor: TorEvent | None = None
        self.k = 0
        self.t = 0.0
        self.ego_s = spec.ego_init.s
        self.ego_lat = 0.0
        self.ego_v = spec.ego_init.v
        self.ego_a = 0.0
        self.lead = LeadController(spec.lead_init.s, spec.lead_init.v,
                                   spec.lead_brake.decel, spec.lead_resume.delay,
                                   spec.lead_resume.accel)
        self.ambient = [[a.lane, a.s, a.v] for a in spec.ambient]
        self._pending = list(spec.tor_events)
        self._steady_streak = 0
        self._steady_needed = int(round(self.arb.hold / spec.dt))
        self._last_match: int | None = None
        self._tick_events: list[str] = []
        self.termination: str | None = None
        strategies = {e.target for e in spec.tor_events}
        strategy = strategies.pop().value if len(strategies) == 1 else "MIXED"
        self.log = DriveLog(meta={
            "spec_name": spec.name,
            "spec_hash": spec_hash(spec),
            "seed": seed,
            "driver_id": driver_id,
            "strategy": strategy,
            "alpha": self.arb.alpha,
            "dt": spec.dt,
            "sub_steps": sub_steps,
            "lead_length": spec.lead_length,
            "tor_events": [],
            "termination": "",
        })

    # -- per-tick interface ------------------------------------------------

    def gap(self) -> float:
        return (self.lead.s - self.ego_s) - self.spec.lead_length

    def percept(self) -> tuple[float, float, float]:
        return self.gap(), self.ego_v, self.lead.v

    @property
    def done(self) -> bool:
        return self.termination is not None

    def begin_tick(self) -> None:
        """Apply arbitration events for the tick about to run."""
        self._tick_events = []
        if self.mode is not AutomationMode.AUTO:
            if tick_is_steady(self.gap(), self.ego_v, self.lead.v, self.arb):
                self._steady_streak += 1
            else:
                self._steady_streak = 0
            if self._steady_streak >= self._steady_needed:
                self.mode = transition(self.mode, ArbiterSignal.STEADY_FOLLOWING)
                self.active_tor = None
                self._steady_streak = 0
                self._tick_events.append("steady_following")
        if self.mode is AutomationMode.AUTO and self._pending:
            ev = self._pending[0]
            if _tor_triggered(ev, self.t, self.ego_s):
                self._pending.pop(0)
                tor = TorEvent(target=ev.target, disengagement=ev.disengagement,
                               t_issued=self.t)
                self.mode = transition(self.mode, tor)
                self.active_tor = tor
                onset = self.t + self.spec.lead_brake.offset_for(ev.disengagement)
                self.lead.schedule_brake(onset)
                self.log.meta["tor_events"].append({
                    "target": ev.target.value,
                    "disengagement": ev.disengagement.value,
                    "t_issued": self.t,
                    "lead_brake_onset": onset,
                })
                self._tick_events.append("tor_issued")

    def finish_tick(self, u_driver: ControlInput) -> None:
        """Blend inputs, log the tick, and step the world by dt."""
        u_driver = clamp_control(u_driver.throttle, u_driver.brake, u_driver.steering,
                                 self.dyn.steer_max)
        i = match_index(self.trace, self.match_cfg, self.t, self.ego_s, self.ego_lat,
                        self._last_match)
        self._last_match = i
        u_expert = self.trace.control_at(i)
        u_applied = blend(u_driver, u_expert, self.mode, self.arb.alpha, self.dyn.steer_max)

        log = self.log
        log.t.append(self.t)
        log.ego_s.append(self.ego_s)
        log.ego_lat.append(self.ego_lat)
        log.ego_v.append(self.ego_v)
        log.ego_a.append(self.ego_a)
        log.lead_s.append(self.lead.s)
        log.lead_v.append(self.lead.v)
        log.lead_a.append(self.lead.a)
        log.mode.append(_MODE_CODE[self.mode])
        log.ud_throttle.append(u_driver.throttle)
        log.ud_brake.append(u_driver.brake)
        log.ud_steering.append(u_driver.steering)
        log.ue_throttle.append(u_expert.throttle)
        log.ue_brake.append(u_expert.brake)
        log.ue_steering.append(u_expert.steering)
        log.ua_throttle.append(u_applied.throttle)
        log.ua_brake.append(u_applied.brake)
        log.ua_steering.append(u_applied.steering)
        log.tor_flag.append(self.active_tor is not None)
        log.match_idx.append(i)
        if self._tick_events:
            log.events[self.k] = tuple(self._tick_events)

        dt = self.spec.dt
        accel = u_applied.throttle * self.dyn.a_max - u_applied.brake * self.dyn.b_max
        h = dt / self.sub_steps
        s, lat, v = self.ego_s, self.ego_lat, self.ego_v
        for _ in range(self.sub_steps):
            lat += lateral_gain(v, self.dyn) * u_applied.steering * h
            s, v = advance(s, v, accel, h)
        self.ego_s, self.ego_lat, self.ego_v, self.ego_a = s, lat, v, accel
        self.lead.step(self.t, dt)
        for amb in self.ambient:
            amb[1] += amb[2] * dt

        self.k += 1
        self.t = self.k * dt
        if self.gap() <= 0.0:
            self._append_impact_record()
            self._terminate("collision")
        elif self.ego_s >= self.spec.route_length:
            self._terminate("route_end")
        elif self.k >= self.spec.n_ticks:
            self._terminate("duration")

    def _append_impact_record(self) -> None:
        log = self.log
        log.t.append(self.t)
        log.ego_s.append(self.ego_s)
        log.ego_lat.append(self.ego_lat)
        log.ego_v.append(self.ego_v)
        log.ego_a.append(self.ego_a)
        log.lead_s.append(self.lead.s)
        log.lead_v.append(self.lead.v)
        log.lead_a.append(self.lead.a)
        log.mode.append(_MODE_CODE[self.mode])
        for col in (log.ud_throttle, log.ud_brake, log.ud_steering,
                    log.ue_throttle, log.ue_brake, log.ue_steering,
                    log.ua_throttle, log.ua_brake, log.ua_steering):
            col.append(0.0)
        log.tor_flag.append(self.active_tor is not None)
        log.match_idx.append(self._last_match if self._last_match is not None else 0)
        log.events[self.k] = ("collision",)

    def _terminate(self, reason: str) -> None:
        self.termination = reason
        self.log.meta["termination"] = reason

    def abort(self, reason: str) -> DriveLog:
        """End the drive early (live sessions: client disconnect)."""
        self._terminate(reason)
        return self.log


def run_drive(spec: ScenarioSpec, driver: DriverSource, cfg: ArbiterConfig,
              trace: ExpertTrace, seed: int = 0, *,
              match_cfg: MatchConfig | None = None, dyn: DynamicsParams | None = None,
              sub_steps: int = DEFAULT_SUB_STEPS, driver_id: str = "") -> DriveLog:
    """Execute one scripted drive headlessly and return its log.

    driver is a DriverParams (simulated participant), a per-tick sequence of
    ControlInput (replay of recorded inputs; zero once exhausted), or a
    callable (t, active_tor, percept) -> ControlInput.
    """
    sim = Simulation(spec, trace, cfg, match_cfg, dyn, seed=seed, driver_id=driver_id,
                     sub_steps=sub_steps)
    if isinstance(driver, DriverParams):
        model = SimulatedDriver(driver, sim.dyn, drive_seed=seed)
        source = model.control
    elif callable(driver):
        source = driver
    else:
        controls = driver

        def source(t: float, tor: TorEvent | None, percept: tuple) -> ControlInput:
            k = sim.k
            return controls[k] if k < len(controls) else ZERO_INPUT

    while not sim.done:
        sim.begin_tick()
        u = source(sim.t, sim.active_tor, sim.percept())
        sim.finish_tick(u)
    return sim.log


def replay_drive(spec: ScenarioSpec, log: DriveLog, cfg: ArbiterConfig,
                 trace: ExpertTrace, **kwargs) -> DriveLog:
    """Re-run a drive from its recorded driver inputs."""
    return run_drive(spec, log.driver_controls(), cfg, trace,
                     seed=int(log.meta.get("seed", 0)),
                     driver_id=str(log.meta.get("driver_id", "")), **kwargs)


def generate_trace(spec: ScenarioSpec, fp: FollowerParams | None = None,
                   dyn: DynamicsParams | None = None,
                   sub_steps: int = DEFAULT_SUB_STEPS,
                   recording_id: str = "synthetic") -> ExpertTrace:
    """Record a synthetic expert drive of the given scenario.

    The expert is a constant-headway follower with no reaction lag, driving
    the scenario's lead script (takeover triggers reduce to their lead-brake
    events). The recording uses the same integrator and sub-stepping as live
    drives, so replaying it through the engine reproduces it bit-for-bit.
    """
    fp = fp or FollowerParams()
    dyn = dyn or DynamicsParams()
    lead = LeadController(spec.lead_init.s, spec.lead_init.v, spec.lead_brake.decel,
                          spec.lead_resume.delay, spec.lead_resume.accel)
    pending = list(spec.tor_events)
    s, lat, v = spec.ego_init.s, 0.0, spec.ego_init.v
    dt = spec.dt
    h = dt / sub_steps
    samples: list[ExpertTraceSample] = []
    for k in range(spec.n_ticks):
        t = k * dt
        while pending and _tor_triggered(pending[0], t, s):
            ev = pending.pop(0)
            lead.schedule_brake(t + spec.lead_brake.offset_for(ev.disengagement))
        gap_m = (lead.s - s) - spec.lead_length
        if gap_m <= 0.0:
            raise ConfigError(
                f"synthetic expert collided at t={t:.2f} s in {spec.name!r}; "
                "follower parameters are not safe for this scenario")
        u = pedals_for_accel(follow_accel_snapped(gap_m, v, lead.v, fp, dt), dyn)
        samples.append(ExpertTraceSample(t, s, lat, v, u))
        accel = u.throttle * dyn.a_max - u.brake * dyn.b_max
        for _ in range(sub_steps):
            lat += lateral_gain(v, dyn) * u.steering * h
            s, v = advance(s, v, accel, h)
        lead.step(t, dt)
    return ExpertTrace(samples, route_id=spec.name, recording_id=recording_id)
