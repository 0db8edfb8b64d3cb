"""Surrogate safety measures and analysis operations over drive logs.

TTC is gap over closing speed while the follower is faster; zero once the gap
has closed (collision), infinite while the gap opens. TET and TIT integrate
the below-threshold exposure piecewise-linearly with exact threshold-crossing
refinement, which reproduces closed-form cases exactly and stays within
dt * theta of the plain per-tick rectangle rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .arbitration import TorEvent
from .drivelog import DriveLog
from .errors import ValidationError

DEFAULT_TTC_THRESHOLD = 3.0  # s; config-exposed, recorded in every report
DEFAULT_BRAKE_EPS = 0.05     # normalized force counting as a brake press
DEFAULT_EVAL_WINDOW = 20.0   # s after a takeover request


@dataclass(frozen=True)
class SafetyReport:
    """Per-drive safety outcome; None rt means the brake was never pressed."""

    rt: float | None
    min_ttc: float
    tet: float
    tit: float
    collision: bool
    ttc_threshold_used: float


@dataclass(frozen=True)
class TtcSeries:
    t: np.ndarray
    ttc: np.ndarray

    def window(self, t0: float, t1: float) -> "TtcSeries":
        if not t1 > t0:
            raise ValidationError(f"empty evaluation window [{t0}, {t1}]")
        mask = (self.t >= t0) & (self.t <= t1)
        if not mask.any():
            raise ValidationError(f"evaluation window [{t0}, {t1}] contains no samples")
        return TtcSeries(self.t[mask], self.ttc[mask])


def ttc_series(log: DriveLog) -> TtcSeries:
    """Time to collision against the lead at every tick."""
    t = np.asarray(log.t, dtype=np.float64)
    gap = (np.asarray(log.lead_s) - np.asarray(log.ego_s)) - float(log.meta["lead_length"])
    closing = np.asarray(log.ego_v) - np.asarray(log.lead_v)
    ttc = np.full(len(t), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        closing_mask = (closing > 0) & (gap > 0)
        ttc[closing_mask] = gap[closing_mask] / closing[closing_mask]
    ttc[gap <= 0] = 0.0
    return TtcSeries(t, ttc)


def min_ttc(series: TtcSeries, window: tuple[float, float]) -> float:
    """Minimum finite TTC inside the window; +inf when the gap only opened."""
    sub = series.window(*window)
    finite = sub.ttc[np.isfinite(sub.ttc)]
    return float(finite.min()) if finite.size else math.inf


def _below_threshold_integrals(t: np.ndarray, f: np.ndarray, theta: float) -> tuple[float, float]:
    """Time spent and area accumulated below theta over a sampled profile.

    Each sample interval is integrated linearly between finite endpoints with
    the threshold crossing located exactly; an interval with one non-finite
    endpoint holds the finite value, and one with none contributes nothing.
    """
    tet_terms: list[float] = []
    tit_terms: list[float] = []
    for i in range(len(t) - 1):
        dt = t[i + 1] - t[i]
        f0, f1 = f[i], f[i + 1]
        fin0, fin1 = math.isfinite(f0), math.isfinite(f1)
        if not (fin0 or fin1):
            continue
        if fin0 != fin1:
            fc = f0 if fin0 else f1
            if fc < theta:
                tet_terms.append(dt)
                tit_terms.append(dt * (theta - fc))
            continue
        b0, b1 = f0 < theta, f1 < theta
        if b0 and b1:
            tet_terms.append(dt)
            tit_terms.append(dt * (theta - 0.5 * (f0 + f1)))
        elif b0:
            tau = dt * (theta - f0) / (f1 - f0)
            tet_terms.append(tau)
            tit_terms.append(tau * 0.5 * (theta - f0))
        elif b1:
            tau = dt * (theta - f1) / (f0 - f1)
            tet_terms.append(tau)
            tit_terms.append(tau * 0.5 * (theta - f1))
    return math.fsum(tet_terms), math.fsum(tit_terms)


def tet(series: TtcSeries, theta: float = DEFAULT_TTC_THRESHOLD) -> float:
    """Time exposed TTC: duration with 0 <= ttc < theta."""
    if not theta > 0:
        raise ValidationError("theta must be positive")
    return _below_threshold_integrals(series.t, series.ttc, theta)[0]


def tit(series: TtcSeries, theta: float = DEFAULT_TTC_THRESHOLD) -> float:
    """Time integrated TTC: integral of (theta - ttc) while 0 <= ttc < theta."""
    if not theta > 0:
        raise ValidationError("theta must be positive")
    return _below_threshold_integrals(series.t, series.ttc, theta)[1]


def reaction_time(log: DriveLog, tor: TorEvent | dict, eps: float = DEFAULT_BRAKE_EPS,
                  window: float = DEFAULT_EVAL_WINDOW) -> float | None:
    """Delay from the takeover request to the first brake press above eps.

    Brake activity before the request is ignored. None when the driver never
    pressed the brake inside the evaluation window.
    """
    t_issued = tor["t_issued"] if isinstance(tor, dict) else tor.t_issued
    t = np.asarray(log.t)
    if not len(t) or t_issued < t[0] or t_issued > t[-1]:
        raise ValidationError(f"takeover request at {t_issued} s is not inside the log")
    brake = np.asarray(log.ud_brake)
    mask = (t >= t_issued) & (t <= t_issued + window) & (brake > eps)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return None
    return float(t[idx[0]] - t_issued)


def tlx_overall(scores: Sequence[float]) -> float:
    """Unweighted mean of the six workload dimensions."""
    if len(scores) != 6:
        raise ValidationError(f"expected 6 TLX scores, got {len(scores)}")
    for sc in scores:
        if not (math.isfinite(sc) and 0.0 <= sc <= 100.0):
            raise ValidationError(f"TLX score {sc} outside [0, 100]")
    return math.fsum(scores) / 6.0


@dataclass(frozen=True)
class TlxRating:
    """Six-dimension subjective workload rating, 0-100 each."""

    mental: float
    physical: float
    temporal: float
    performance: float
    effort: float
    frustration: float
    overall: float = 0.0

    def __post_init__(self) -> None:
        computed = tlx_overall(self.scores())
        object.__setattr__(self, "overall", computed)

    def scores(self) -> tuple[float, ...]:
        return (self.mental, self.physical, self.temporal,
                self.performance, self.effort, self.frustration)


GROUP_THRESHOLD = 0.2  # s of minTTC difference


def group_assign(d_min_ttc: float) -> int:
    """Classify a shared-minus-manual minTTC difference into groups 1/2/3.

    The middle bin is closed: both boundaries fall in group 2.
    """
    if not math.isfinite(d_min_ttc):
        raise ValidationError("minTTC difference must be finite")
    if d_min_ttc < -GROUP_THRESHOLD:
        return 1
    if d_min_ttc > GROUP_THRESHOLD:
        return 3
    return 2


@dataclass(frozen=True)
class GroupAssignment:
    driver_id: str
    d_min_ttc: float
    group: int

    @classmethod
    def from_diff(cls, driver_id: str, d_min_ttc: float) -> "GroupAssignment":
        return cls(driver_id, d_min_ttc, group_assign(d_min_ttc))


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float

    def as_dict(self) -> dict[str, float]:
        return {"t": self.t, "df": self.df, "p": self.p}


def welch_t(sample_a: Sequence[float], sample_b: Sequence[float]) -> TTestResult:
    """Welch's unequal-variance two-sample t-test, two-sided.

    Degenerate zero-variance samples are handled explicitly: equal means give
    t = 0, p = 1; unequal means give an infinite statistic with p = 0.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValidationError("each sample needs at least 2 values")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValidationError("samples must be finite")
    na, nb = a.size, b.size
    ma, mb = float(a.mean()), float(b.mean())
    sa = float(a.var(ddof=1)) / na
    sb = float(b.var(ddof=1)) / nb
    se2 = sa + sb
    if se2 == 0.0:
        if ma == mb:
            return TTestResult(0.0, float(na + nb - 2), 1.0)
        return TTestResult(math.copysign(math.inf, ma - mb), float(na + nb - 2), 0.0)
    t_stat = (ma - mb) / math.sqrt(se2)
    df = se2 * se2 / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    p = 2.0 * float(stats.t.sf(abs(t_stat), df))
    return TTestResult(t_stat, df, p)


def build_report(log: DriveLog, theta: float = DEFAULT_TTC_THRESHOLD,
                 eps: float = DEFAULT_BRAKE_EPS,
                 window: float = DEFAULT_EVAL_WINDOW) -> SafetyReport:
    """Aggregate safety metrics over every takeover event of one drive.

    Per event, metrics are taken on [t_issued, t_issued + window] (clamped to
    the log end). Across events: rt averages the observed reactions, min_ttc
    takes the worst event, TET/TIT accumulate. A log without takeover events
    is evaluated over its whole span.
    """
    series = ttc_series(log)
    collision = log.meta.get("termination") == "collision"
    tors = log.meta.get("tor_events", [])
    t_end = log.t[-1]
    if not tors:
        sub = series.window(log.t[0], t_end) if t_end > log.t[0] else series
        return SafetyReport(rt=None, min_ttc=min_ttc(series, (log.t[0], t_end)),
                            tet=tet(sub, theta), tit=tit(sub, theta),
                            collision=collision, ttc_threshold_used=theta)
    rts: list[float] = []
    mins: list[float] = []
    tets: list[float] = []
    tits: list[float] = []
    for tor in tors:
        t0 = tor["t_issued"]
        t1 = min(t0 + window, t_end)
        if not t1 > t0:
            continue
        rt = reaction_time(log, tor, eps, window)
        if rt is not None:
            rts.append(rt)
        mins.append(min_ttc(series, (t0, t1)))
        sub = series.window(t0, t1)
        tets.append(tet(sub, theta))
        tits.append(tit(sub, theta))
    # A collision is the worst possible conflict regardless of which
    # evaluation window contains the impact tick.
    worst = 0.0 if collision else (min(mins) if mins else math.inf)
    return SafetyReport(
        rt=math.fsum(rts) / len(rts) if rts else None,
        min_ttc=worst,
        tet=math.fsum(tets),
        tit=math.fsum(tits),
        collision=collision,
        ttc_threshold_used=theta,
    )
