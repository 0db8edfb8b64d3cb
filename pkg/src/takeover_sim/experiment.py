"""Batch experiment runner: condition cross-product, reports, and summary.

Each cell of drivers x strategies x disengagements x repetitions runs one
drive on a canonical route whose takeover events are retargeted to the cell's
strategy and disengagement. Every output is byte-deterministic for a fixed
config and seed: rerunning produces hash-identical logs and summary.
"""
from __future__ import annotations

import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .arbitration import ArbiterConfig, AutomationMode, Disengagement
from .driver import DriverParams
from .drivelog import to_jsonl
from .engine import generate_trace, run_drive
from .errors import ConfigError
from .expert import ExpertTrace
from .metrics import (DEFAULT_BRAKE_EPS, DEFAULT_EVAL_WINDOW, DEFAULT_TTC_THRESHOLD,
                      GroupAssignment, SafetyReport, build_report, welch_t)
from .scenario import ScenarioSpec, counterbalance, load_scenario, make_routes, spec_hash

REPORT_HEADER = ("driver_id,strategy,disengagement,repetition,route,"
                 "rt,min_ttc,tet,tit,collision,ttc_threshold")
GROUPS_HEADER = "disengagement,driver_id,d_min_ttc,group"


@dataclass(frozen=True)
class ExperimentConfig:
    drivers: tuple[tuple[str, DriverParams], ...]
    routes: tuple[str, ...] = ("route_a", "route_b")
    strategies: tuple[AutomationMode, ...] = (AutomationMode.SHARED, AutomationMode.MANUAL)
    disengagements: tuple[Disengagement, ...] = (Disengagement.ORDINARY, Disengagement.URGENT)
    repetitions: int = 1
    seed: int = 0
    theta: float = DEFAULT_TTC_THRESHOLD
    eps: float = DEFAULT_BRAKE_EPS
    window: float = DEFAULT_EVAL_WINDOW
    alpha: float = 0.5
    out_dir: str = "results"

    def __post_init__(self) -> None:
        if not self.drivers:
            raise ConfigError("experiment needs at least one driver")
        if not (self.routes and self.strategies and self.disengagements and self.repetitions >= 1):
            raise ConfigError("experiment condition cross-product is empty")
        ids = [d[0] for d in self.drivers]
        if len(set(ids)) != len(ids):
            raise ConfigError("driver ids must be unique")

    @property
    def n_drives(self) -> int:
        return (len(self.drivers) * len(self.strategies)
                * len(self.disengagements) * self.repetitions)


def experiment_from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    try:
        drivers = []
        for entry in raw["drivers"]:
            params = DriverParams(
                rt=float(entry["rt"]),
                ramp=float(entry.get("ramp", 2.0)),
                target_brake=float(entry.get("target_brake", 0.9)),
                release_gap=float(entry.get("release_gap", 15.0)),
                noise_seed=int(entry.get("noise_seed", 0)),
            )
            drivers.append((str(entry["id"]), params))
        return ExperimentConfig(
            drivers=tuple(drivers),
            routes=tuple(raw.get("routes", ("route_a", "route_b"))),
            strategies=tuple(AutomationMode(s) for s in raw.get("strategies", ("SHARED", "MANUAL"))),
            disengagements=tuple(Disengagement(d)
                                 for d in raw.get("disengagements", ("ORDINARY", "URGENT"))),
            repetitions=int(raw.get("repetitions", 1)),
            seed=int(raw.get("seed", 0)),
            theta=float(raw.get("theta", DEFAULT_TTC_THRESHOLD)),
            eps=float(raw.get("eps", DEFAULT_BRAKE_EPS)),
            window=float(raw.get("window", DEFAULT_EVAL_WINDOW)),
            alpha=float(raw.get("alpha", 0.5)),
            out_dir=str(raw.get("out", "results")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad experiment config: {exc}") from None


def load_experiment(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"experiment config not found: {path}")
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return experiment_from_dict(raw)


def resolve_route(name: str) -> ScenarioSpec:
    """Canonical route name or a path to a scenario TOML file."""
    canonical = {spec.name: spec for spec in make_routes()}
    if name in canonical:
        return canonical[name]
    return load_scenario(name)


def cell_seed(base: int, driver_id: str, strategy: AutomationMode,
              dis: Disengagement, rep: int) -> int:
    key = f"{base}|{driver_id}|{strategy.value}|{dis.value}|{rep}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:6], "big")


@dataclass
class CellResult:
    driver_id: str
    strategy: AutomationMode
    disengagement: Disengagement
    repetition: int
    route: str
    report: SafetyReport
    log_name: str
    log_text: str = field(repr=False, default="")


def _run_cell(args: tuple) -> CellResult:
    (driver_id, params, strategy, dis, rep, route_name, route_spec, theta, eps,
     window, alpha, seed) = args
    spec = route_spec.with_strategy(strategy, dis)
    trace = _trace_for(route_spec, dis)
    cfg = ArbiterConfig(alpha=alpha)
    log = run_drive(spec, params, cfg, trace, seed=seed, driver_id=driver_id)
    report = build_report(log, theta=theta, eps=eps, window=window)
    name = f"{driver_id}_{strategy.value}_{dis.value}_{route_name}_r{rep}.jsonl"
    return CellResult(driver_id, strategy, dis, rep, route_name, report, name, to_jsonl(log))


_TRACE_CACHE: dict[tuple[str, str], ExpertTrace] = {}


def _trace_for(route_spec: ScenarioSpec, dis: Disengagement) -> ExpertTrace:
    key = (spec_hash(route_spec), dis.value)
    trace = _TRACE_CACHE.get(key)
    if trace is None:
        # Trace depends on the disengagement (lead-brake offsets), not the
        # strategy; record it once per (route, disengagement).
        trace = generate_trace(route_spec.with_strategy(AutomationMode.SHARED, dis))
        _TRACE_CACHE[key] = trace
    return trace


def _csv_num(x: float | None) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _stats(values: Sequence[float]) -> dict[str, Any] | None:
    arr = np.asarray([v for v in values if math.isfinite(v)], dtype=np.float64)
    if arr.size == 0:
        return None
    q = np.quantile(arr, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {"n": int(arr.size), "mean": float(arr.mean()), "min": float(q[0]),
            "q1": float(q[1]), "median": float(q[2]), "q3": float(q[3]),
            "max": float(q[4])}


def _condition_key(strategy: AutomationMode, dis: Disengagement) -> str:
    return f"{strategy.value}|{dis.value}"


def summarize(cfg: ExperimentConfig, results: list[CellResult]) -> dict[str, Any]:
    conditions: dict[str, Any] = {}
    by_cond: dict[tuple[AutomationMode, Disengagement], list[CellResult]] = {}
    for res in results:
        by_cond.setdefault((res.strategy, res.disengagement), []).append(res)
    for (strategy, dis), cell in sorted(by_cond.items(), key=lambda kv: _condition_key(*kv[0])):
        reports = [c.report for c in cell]
        conditions[_condition_key(strategy, dis)] = {
            "n": len(reports),
            "collisions": sum(1 for r in reports if r.collision),
            "min_ttc": _stats([r.min_ttc for r in reports]),
            "rt": _stats([r.rt for r in reports if r.rt is not None]),
            "tet": _stats([r.tet for r in reports]),
            "tit": _stats([r.tit for r in reports]),
        }

    # per-driver strategy contrast and grouping, per disengagement kind
    groups: dict[str, list[dict[str, Any]]] = {}
    t_tests: dict[str, Any] = {}
    have_both = (AutomationMode.SHARED in cfg.strategies
                 and AutomationMode.MANUAL in cfg.strategies)
    for dis in cfg.disengagements:
        rows: list[dict[str, Any]] = []
        if have_both:
            for driver_id, _ in cfg.drivers:
                vals: dict[AutomationMode, list[float]] = {}
                for res in results:
                    if res.driver_id == driver_id and res.disengagement == dis:
                        vals.setdefault(res.strategy, []).append(res.report.min_ttc)
                shared = vals.get(AutomationMode.SHARED, [])
                manual = vals.get(AutomationMode.MANUAL, [])
                if shared and manual:
                    d = float(np.mean(shared) - np.mean(manual))
                    if math.isfinite(d):
                        ga = GroupAssignment.from_diff(driver_id, d)
                        rows.append({"driver_id": driver_id, "d_min_ttc": ga.d_min_ttc,
                                     "group": ga.group})
                    else:
                        rows.append({"driver_id": driver_id, "d_min_ttc": None,
                                     "group": None})
        groups[dis.value] = rows

        tests: dict[str, Any] = {}
        if have_both:
            for metric in ("min_ttc", "rt", "tet", "tit"):
                samples: dict[AutomationMode, list[float]] = {
                    AutomationMode.SHARED: [], AutomationMode.MANUAL: []}
                for res in results:
                    if res.disengagement != dis or res.strategy not in samples:
                        continue
                    val = getattr(res.report, metric)
                    if val is not None and math.isfinite(val):
                        samples[res.strategy].append(val)
                a, b = samples[AutomationMode.SHARED], samples[AutomationMode.MANUAL]
                if len(a) >= 2 and len(b) >= 2:
                    tests[metric] = welch_t(a, b).as_dict()
                else:
                    tests[metric] = None
        t_tests[dis.value] = tests

    drive_names = sorted({f"{res.route}|{res.strategy.value}|{res.disengagement.value}"
                          for res in results})
    plan = {"group_1": counterbalance(drive_names, 1), "group_2": counterbalance(drive_names, 2)}

    return {
        "seed": cfg.seed,
        "theta": cfg.theta,
        "eps": cfg.eps,
        "window": cfg.window,
        "alpha": cfg.alpha,
        "n_drives": len(results),
        "conditions": conditions,
        "groups": groups,
        "t_tests": t_tests,
        "counterbalanced_plan": plan,
    }


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None,
                   threads: int = 1) -> dict[str, Any]:
    """Execute the full condition cross-product and write all outputs.

    Returns the summary dict. On any error, files written so far are removed
    so a failed run leaves no partial outputs behind.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    route_specs = {name: resolve_route(name) for name in cfg.routes}

    cells = []
    route_names = list(cfg.routes)
    for driver_id, params in cfg.drivers:
        for strategy in cfg.strategies:
            for dis in cfg.disengagements:
                for rep in range(cfg.repetitions):
                    route_name = route_names[rep % len(route_names)]
                    cells.append((driver_id, params, strategy, dis, rep, route_name,
                                  route_specs[route_name], cfg.theta, cfg.eps,
                                  cfg.window, cfg.alpha,
                                  cell_seed(cfg.seed, driver_id, strategy, dis, rep)))

    # warm the trace cache up front so missing/unsafe scenarios fail before
    # any file is written
    for name in cfg.routes:
        for dis in cfg.disengagements:
            _trace_for(route_specs[name], dis)

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell, cells, chunksize=4))
    else:
        results = [_run_cell(c) for c in cells]
    results.sort(key=lambda r: (r.driver_id, r.strategy.value, r.disengagement.value,
                                r.repetition))

    summary = summarize(cfg, results)
    written: list[Path] = []
    try:
        (out / "logs").mkdir(parents=True, exist_ok=True)
        for res in results:
            path = out / "logs" / res.log_name
            path.write_text(res.log_text, encoding="utf-8")
            written.append(path)

        lines = [REPORT_HEADER]
        for res in results:
            r = res.report
            lines.append(f"{res.driver_id},{res.strategy.value},{res.disengagement.value},"
                         f"{res.repetition},{res.route},{_csv_num(r.rt)},{_csv_num(r.min_ttc)},"
                         f"{_csv_num(r.tet)},{_csv_num(r.tit)},{int(r.collision)},"
                         f"{_csv_num(r.ttc_threshold_used)}")
        reports_path = out / "reports.csv"
        reports_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(reports_path)

        glines = [GROUPS_HEADER]
        for dis_name, rows in summary["groups"].items():
            for row in rows:
                d = "" if row["d_min_ttc"] is None else repr(row["d_min_ttc"])
                g = "" if row["group"] is None else row["group"]
                glines.append(f"{dis_name},{row['driver_id']},{d},{g}")
        groups_path = out / "groups.csv"
        groups_path.write_text("\n".join(glines) + "\n", encoding="utf-8")
        written.append(groups_path)

        summary_path = out / "summary.json"
        summary_path.write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n",
                                encoding="utf-8")
        written.append(summary_path)
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return summary
