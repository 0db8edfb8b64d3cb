"""Expert drive recordings and nearest-point control retrieval.

The automation policy replays a recorded drive: at each tick the sample
closest to the live vehicle in time and space (weighted squared distance)
supplies the control input. The search is windowed around the previous match
so per-step cost is bounded and the index cannot jump back on long routes.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ControlInput, VehicleState, validate_control
from .errors import TraceParseError, ValidationError

TRACE_HEADER = "t,s,lat,v,throttle,brake,steering"
NOMINAL_SAMPLE_DT = 0.05  # 20 Hz recording rate


@dataclass(frozen=True)
class ExpertTraceSample:
    t: float
    s: float
    lat: float
    v: float
    u: ControlInput


@dataclass
class ExpertTrace:
    """Immutable-after-load recording of an expert drive."""

    samples: list[ExpertTraceSample]
    route_id: str = ""
    recording_id: str = ""
    # column views built once for fast matching
    _t: np.ndarray = field(init=False, repr=False)
    _s: np.ndarray = field(init=False, repr=False)
    _lat: np.ndarray = field(init=False, repr=False)
    _throttle: np.ndarray = field(init=False, repr=False)
    _brake: np.ndarray = field(init=False, repr=False)
    _steering: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.samples) < 2:
            raise ValidationError("too few samples: an expert trace needs at least 2")
        t = np.array([smp.t for smp in self.samples], dtype=np.float64)
        if not np.all(np.diff(t) > 0.0):
            row = int(np.argmin(np.diff(t) > 0.0)) + 2
            raise ValidationError(f"non-monotone time at row {row}")
        self._t = t
        self._s = np.array([smp.s for smp in self.samples], dtype=np.float64)
        self._lat = np.array([smp.lat for smp in self.samples], dtype=np.float64)
        self._throttle = np.array([smp.u.throttle for smp in self.samples], dtype=np.float64)
        self._brake = np.array([smp.u.brake for smp in self.samples], dtype=np.float64)
        self._steering = np.array([smp.u.steering for smp in self.samples], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.samples)

    def control_at(self, i: int) -> ControlInput:
        return self.samples[i].u

    @property
    def duration(self) -> float:
        return float(self._t[-1] - self._t[0])


@dataclass(frozen=True)
class MatchConfig:
    """Weights of the squared time/space distance and the search half-width."""

    w_t: float = 1.0    # 1/s^2
    w_s: float = 1.0    # 1/m^2
    w_lat: float = 4.0  # 1/m^2, penalize lane error harder than longitudinal
    window: int = 100   # samples to each side of the previous match

    def __post_init__(self) -> None:
        if self.w_t < 0 or self.w_s < 0 or self.w_lat < 0:
            raise ValidationError("match weights must be non-negative")
        if self.w_t == 0 and self.w_s == 0 and self.w_lat == 0:
            raise ValidationError("at least one match weight must be positive")
        if self.window < 1:
            raise ValidationError("window must be >= 1")


def load_trace(data: bytes | str, route_id: str = "", recording_id: str = "",
               expected_dt: float | None = NOMINAL_SAMPLE_DT,
               jitter: float = 0.10) -> ExpertTrace:
    """Parse a trace file (UTF-8 CSV, LF lines, fixed header).

    Rejects a wrong header, malformed rows, non-monotone time, fewer than two
    samples, and (when expected_dt is given) sample spacing outside the
    +/- jitter tolerance of the nominal recording interval.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TraceParseError(f"trace is not valid UTF-8: {exc}") from None
    else:
        text = data
    lines = [ln for ln in text.split("\n") if ln.strip() != ""]
    if not lines:
        raise TraceParseError("too few samples: empty trace file")
    header = lines[0].strip()
    if header != TRACE_HEADER:
        raise TraceParseError(f"bad header {header!r}, expected {TRACE_HEADER!r}")
    samples: list[ExpertTraceSample] = []
    prev_t: float | None = None
    for row_no, line in enumerate(lines[1:], start=1):
        parts = line.strip().split(",")
        if len(parts) != 7:
            raise TraceParseError(f"malformed row {row_no}: expected 7 fields, got {len(parts)}")
        try:
            t, s, lat, v, throttle, brake, steering = (float(p) for p in parts)
        except ValueError:
            raise TraceParseError(f"malformed row {row_no}: non-numeric field") from None
        if not all(map(math.isfinite, (t, s, lat, v, throttle, brake, steering))):
            raise TraceParseError(f"malformed row {row_no}: non-finite value")
        if v < 0:
            raise TraceParseError(f"malformed row {row_no}: negative speed")
        u = ControlInput(throttle, brake, steering)
        try:
            validate_control(u)
        except ValidationError as exc:
            raise TraceParseError(f"malformed row {row_no}: {exc}") from None
        if prev_t is not None:
            if t <= prev_t:
                raise TraceParseError(f"non-monotone time at row {row_no}")
            if expected_dt is not None:
                step = t - prev_t
                if abs(step - expected_dt) > jitter * expected_dt:
                    raise TraceParseError(
                        f"sample interval {step:.6g} s at row {row_no} outside "
                        f"{expected_dt} s +/- {jitter:.0%}")
        prev_t = t
        samples.append(ExpertTraceSample(t, s, lat, v, u))
    if len(samples) < 2:
        raise TraceParseError("too few samples: an expert trace needs at least 2")
    return ExpertTrace(samples, route_id=route_id, recording_id=recording_id)


def dump_trace(trace: ExpertTrace) -> str:
    """Serialize a trace back to the CSV file format (LF line endings)."""
    out = io.StringIO()
    out.write(TRACE_HEADER + "\n")
    for smp in trace.samples:
        out.write(f"{smp.t!r},{smp.s!r},{smp.lat!r},{smp.v!r},"
                  f"{smp.u.throttle!r},{smp.u.brake!r},{smp.u.steering!r}\n")
    return out.getvalue()


def match_index(trace: ExpertTrace, cfg: MatchConfig, t: float, s: float, lat: float,
                last_match: int | None = None) -> int:
    """Index of the sample minimizing the weighted squared distance.

    Searches +/- cfg.window samples around last_match, or the whole trace when
    there is no prior match. Exact ties resolve to the lower index (numpy
    argmin returns the first minimum).
    """
    n = len(trace._t)
    if last_match is None:
        lo, hi = 0, n
    else:
        lo = max(0, last_match - cfg.window)
        hi = min(n, last_match + cfg.window + 1)
    dt_ = t - trace._t[lo:hi]
    ds = s - trace._s[lo:hi]
    dl = lat - trace._lat[lo:hi]
    d2 = cfg.w_t * dt_ * dt_
    d2 += cfg.w_s * ds * ds
    d2 += cfg.w_lat * dl * dl
    return lo + int(np.argmin(d2))


def expert_input(trace: ExpertTrace, cfg: MatchConfig, t: float, ego: VehicleState,
                 last_match: int | None = None) -> tuple[ControlInput, int]:
    """Control input of the nearest recorded sample, plus its index.

    The returned index should be fed back as last_match on the next call so
    the windowed search tracks forward along the recording.
    """
    i = match_index(trace, cfg, t, ego.s, ego.lat, last_match)
    return trace.control_at(i), i
