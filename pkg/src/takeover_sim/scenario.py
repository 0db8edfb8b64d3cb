"""Declarative drive scripts: routes, takeover triggers, lead braking events.

Scenario files are TOML (key/value plus nested tables); the two canonical
routes are built in code by make_routes() and also shipped as files under
scenarios/.
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .arbitration import AutomationMode, Disengagement
from .dynamics import DEFAULT_VEHICLE_LENGTH
from .errors import ConfigError

LEAD_SPEED_RANGE = (8.33, 13.89)  # m/s, 30-50 km/h
AMBIENT_SPEED_RANGE = (8.33, 13.89)


@dataclass(frozen=True)
class InitState:
    s: float
    v: float


@dataclass(frozen=True)
class TorSpec:
    """One scheduled takeover request, triggered by ego position or time."""

    target: AutomationMode
    disengagement: Disengagement
    trigger_s: float | None = None
    trigger_t: float | None = None

    def __post_init__(self) -> None:
        if (self.trigger_s is None) == (self.trigger_t is None):
            raise ConfigError("a TOR event needs exactly one of trigger_s / trigger_t")
        if self.target is AutomationMode.AUTO:
            raise ConfigError("TOR target must be SHARED or MANUAL")


@dataclass(frozen=True)
class LeadBrakeSpec:
    """Emergency braking of the lead, offset from the takeover request."""

    decel: float = 9.8
    ordinary_offset: float = 1.0  # hazard 1 s after an ordinary disengagement
    urgent_offset: float = 0.0    # simultaneous for urgent disengagements

    def offset_for(self, d: Disengagement) -> float:
        return self.ordinary_offset if d is Disengagement.ORDINARY else self.urgent_offset


@dataclass(frozen=True)
class LeadResumeSpec:
    """After an emergency stop the lead dwells, then accelerates back to v0."""

    delay: float = 2.0
    accel: float = 2.0


@dataclass(frozen=True)
class AmbientSpec:
    """Scripted scenery vehicle; kinematic only, never interacts with ego."""

    lane: int
    s: float
    v: float


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    route_length: float
    ego_init: InitState
    lead_init: InitState
    tor_events: tuple[TorSpec, ...]
    dt: float = 0.05
    duration: float = 240.0
    lead_brake: LeadBrakeSpec = field(default_factory=LeadBrakeSpec)
    lead_resume: LeadResumeSpec = field(default_factory=LeadResumeSpec)
    ambient: tuple[AmbientSpec, ...] = ()
    lead_length: float = DEFAULT_VEHICLE_LENGTH

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.duration > 0:
            raise ConfigError("duration must be positive")
        if self.route_length <= 0:
            raise ConfigError("route_length must be positive")
        lo, hi = LEAD_SPEED_RANGE
        if not lo <= self.lead_init.v <= hi:
            raise ConfigError(f"lead speed {self.lead_init.v} outside {lo}-{hi} m/s")
        initial_gap = (self.lead_init.s - self.ego_init.s) - self.lead_length
        if initial_gap <= 0:
            raise ConfigError("ego and lead overlap at start")
        for amb in self.ambient:
            if not AMBIENT_SPEED_RANGE[0] <= amb.v <= AMBIENT_SPEED_RANGE[1]:
                raise ConfigError(f"ambient speed {amb.v} outside 30-50 km/h")
        # triggers of each kind must be ordered; the list order is the firing order
        pos = [e.trigger_s for e in self.tor_events if e.trigger_s is not None]
        if pos != sorted(pos):
            raise ConfigError("position-triggered TOR events must be ordered by trigger_s")
        times = [e.trigger_t for e in self.tor_events if e.trigger_t is not None]
        if times != sorted(times):
            raise ConfigError("time-triggered TOR events must be ordered by trigger_t")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.dt))

    def with_strategy(self, strategy: AutomationMode,
                      disengagement: Disengagement | None = None) -> "ScenarioSpec":
        """Derive a drive variant: retarget every TOR event (and optionally
        force one disengagement kind), as the experiment runner does per cell."""
        events = tuple(
            replace(e, target=strategy,
                    disengagement=disengagement if disengagement is not None else e.disengagement)
            for e in self.tor_events)
        suffix = strategy.value.lower()
        if disengagement is not None:
            suffix += "_" + disengagement.value.lower()
        return replace(self, name=f"{self.name}_{suffix}", tor_events=events)


def spec_to_dict(spec: ScenarioSpec) -> dict[str, Any]:
    d = asdict(spec)
    for ev in d["tor_events"]:
        ev["target"] = ev["target"].value
        ev["disengagement"] = ev["disengagement"].value
    return d


def spec_hash(spec: ScenarioSpec) -> str:
    payload = json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _init_state(table: dict, what: str) -> InitState:
    try:
        return InitState(s=float(table["s"]), v=float(table["v"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what}: {exc}") from None


def scenario_from_dict(raw: dict[str, Any]) -> ScenarioSpec:
    """Build a ScenarioSpec from parsed TOML data."""
    try:
        events = []
        for ev in raw.get("tor_events", []):
            events.append(TorSpec(
                target=AutomationMode(ev["target"]),
                disengagement=Disengagement(ev["disengagement"]),
                trigger_s=float(ev["trigger_s"]) if "trigger_s" in ev else None,
                trigger_t=float(ev["trigger_t"]) if "trigger_t" in ev else None,
            ))
        brake_tbl = raw.get("lead_brake", {})
        resume_tbl = raw.get("lead_resume", {})
        ambient = tuple(
            AmbientSpec(lane=int(a["lane"]), s=float(a["s"]), v=float(a["v"]))
            for a in raw.get("ambient", []))
        return ScenarioSpec(
            name=str(raw.get("name", "scenario")),
            route_length=float(raw["route_length"]),
            dt=float(raw.get("dt", 0.05)),
            duration=float(raw.get("duration", 240.0)),
            ego_init=_init_state(raw["ego_init"], "ego_init"),
            lead_init=_init_state(raw["lead_init"], "lead_init"),
            tor_events=tuple(events),
            lead_brake=LeadBrakeSpec(
                decel=float(brake_tbl.get("decel", 9.8)),
                ordinary_offset=float(brake_tbl.get("ordinary_offset", 1.0)),
                urgent_offset=float(brake_tbl.get("urgent_offset", 0.0))),
            lead_resume=LeadResumeSpec(
                delay=float(resume_tbl.get("delay", 2.0)),
                accel=float(resume_tbl.get("accel", 2.0))),
            ambient=ambient,
            lead_length=float(raw.get("lead_length", DEFAULT_VEHICLE_LENGTH)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad scenario definition: {exc}") from None


def load_scenario(path: str | Path) -> ScenarioSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}")
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return scenario_from_dict(raw)


CRUISE_SPEED = 11.11  # m/s, 40 km/h
# Initial bumper gap matching the synthetic expert's equilibrium headway, so
# recordings start settled: standstill_gap + headway * v = 2.0 + 1.35 * 11.11.
_EQUILIBRIUM_GAP = 2.0 + 1.35 * CRUISE_SPEED


def _route(name: str, tor_positions: tuple[float, float]) -> ScenarioSpec:
    p1, p2 = tor_positions
    return ScenarioSpec(
        name=name,
        route_length=3000.0,
        ego_init=InitState(s=0.0, v=CRUISE_SPEED),
        lead_init=InitState(s=_EQUILIBRIUM_GAP + DEFAULT_VEHICLE_LENGTH, v=CRUISE_SPEED),
        tor_events=(
            TorSpec(target=AutomationMode.SHARED, disengagement=Disengagement.ORDINARY,
                    trigger_s=p1),
            TorSpec(target=AutomationMode.SHARED, disengagement=Disengagement.URGENT,
                    trigger_s=p2),
        ),
        ambient=(
            AmbientSpec(lane=1, s=300.0, v=13.0),
            AmbientSpec(lane=1, s=800.0, v=9.5),
        ),
    )


def make_routes() -> tuple[ScenarioSpec, ScenarioSpec]:
    """The two canonical routes: identical except for TOR trigger positions.

    The trigger positions are plausible stand-ins, not normative values.
    """
    return _route("route_a", (600.0, 1600.0)), _route("route_b", (900.0, 1900.0))


def oracle_scenario(target: AutomationMode = AutomationMode.MANUAL,
                    disengagement: Disengagement = Disengagement.URGENT,
                    gap: float = 15.0, speed: float = CRUISE_SPEED,
                    duration: float = 40.0) -> ScenarioSpec:
    """Single-event scenario with exact initial conditions at the request.

    The TOR fires at t = 0 with the ego and lead both at `speed` and a bumper
    gap of `gap`, which makes collision timing match closed-form kinematics.
    """
    return ScenarioSpec(
        name=f"oracle_{disengagement.value.lower()}_{target.value.lower()}",
        route_length=1000.0,
        duration=duration,
        ego_init=InitState(s=0.0, v=speed),
        lead_init=InitState(s=gap + DEFAULT_VEHICLE_LENGTH, v=speed),
        tor_events=(TorSpec(target=target, disengagement=disengagement, trigger_t=0.0),),
    )


def counterbalance(drives: list, group: int) -> list:
    """Order a drive plan for one of the two participant groups.

    Group 1 keeps the given order, group 2 gets the reverse, so the multiset
    of drives is identical across groups while order effects cancel.
    """
    if group not in (1, 2):
        raise ConfigError(f"group must be 1 or 2, got {group}")
    if not drives:
        raise ConfigError("drive list must be non-empty")
    return list(drives) if group == 1 else list(reversed(drives))
