"""Command line harness: batch runs, live sessions, log analysis, traces.

The default data directory is ./data, overridable with TAKEOVER_SIM_DATA.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import click

from .arbitration import ArbiterConfig, AutomationMode
from .drivelog import from_csv, from_jsonl
from .engine import generate_trace
from .errors import ConfigError, TraceParseError, ValidationError
from .experiment import (REPORT_HEADER, load_experiment, resolve_route, run_experiment,
                         _csv_num)
from .expert import dump_trace, load_trace
from .metrics import DEFAULT_BRAKE_EPS, DEFAULT_EVAL_WINDOW, DEFAULT_TTC_THRESHOLD, build_report
from .session import serve_session


def data_dir() -> Path:
    return Path(os.environ.get("TAKEOVER_SIM_DATA", "data"))


@click.group()
def main() -> None:
    """Deterministic shared-control takeover simulation harness."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Experiment TOML file.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Output directory (default: config's out, under the data dir).")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker processes for the drive cross-product.")
def run_cmd(config_path: str, seed: int | None, out_dir: str | None, threads: int) -> None:
    """Run a batch experiment: logs, safety reports, groups, and summary."""
    try:
        cfg = load_experiment(config_path)
        if seed is not None:
            from dataclasses import replace
            cfg = replace(cfg, seed=seed)
        out = Path(out_dir) if out_dir is not None else data_dir() / cfg.out_dir
        summary = run_experiment(cfg, out_dir=out, threads=threads)
    except (ConfigError, ValidationError, TraceParseError) as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(f"wrote {summary['n_drives']} drives to {out}")


@main.command("serve")
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--scenario", default="route_a", show_default=True,
              help="Canonical route name or scenario TOML path.")
@click.option("--strategy", type=click.Choice(["SHARED", "MANUAL"]), default="SHARED",
              show_default=True, help="Retarget the route's takeover events.")
@click.option("--alpha", type=float, default=0.5, show_default=True,
              help="Automation weight in SHARED mode.")
@click.option("--trace", "trace_path", type=click.Path(exists=True), default=None,
              help="Expert trace CSV (default: synthesize for the scenario).")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Where to persist the session log and TLX rating.")
@click.option("--time-scale", type=float, default=1.0, show_default=True,
              help="Wall-clock seconds per simulated second (0 = lock-step).")
@click.option("--seed", type=int, default=0, show_default=True)
def serve_cmd(port: int, host: str, scenario: str, strategy: str, alpha: float,
              trace_path: str | None, out_dir: str | None, time_scale: float,
              seed: int) -> None:
    """Serve one live cockpit session over the wire protocol."""
    try:
        spec = resolve_route(scenario).with_strategy(AutomationMode(strategy))
        if trace_path is not None:
            trace = load_trace(Path(trace_path).read_bytes(),
                               route_id=spec.name, recording_id=trace_path)
        else:
            trace = generate_trace(spec)
        out = Path(out_dir) if out_dir is not None else data_dir() / "sessions"
        click.echo(f"serving {spec.name} on ws://{host}:{port} (strategy {strategy})")
        result = serve_session(spec, trace, ArbiterConfig(alpha=alpha), port=port,
                               host=host, out_dir=out, time_scale=time_scale, seed=seed)
    except (ConfigError, ValidationError, TraceParseError) as exc:
        raise click.ClickException(str(exc)) from None
    status = "complete" if result.complete else f"incomplete ({result.log.meta['termination']})"
    click.echo(f"session {status}; log: {result.log_path}")


@main.command("analyze")
@click.option("--logs", "log_paths", required=True, multiple=True,
              type=click.Path(exists=True),
              help="Drive log files (.jsonl/.csv) or directories of them.")
@click.option("--theta", type=float, default=DEFAULT_TTC_THRESHOLD, show_default=True,
              help="TTC threshold for TET/TIT.")
@click.option("--eps", type=float, default=DEFAULT_BRAKE_EPS, show_default=True,
              help="Brake force counting as a press.")
@click.option("--window", type=float, default=DEFAULT_EVAL_WINDOW, show_default=True,
              help="Evaluation window after each takeover request.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Write reports.csv here (default: print to stdout).")
def analyze_cmd(log_paths: tuple[str, ...], theta: float, eps: float, window: float,
                out_dir: str | None) -> None:
    """Compute safety reports from recorded drive logs."""
    files: list[Path] = []
    for entry in log_paths:
        path = Path(entry)
        if path.is_dir():
            files.extend(sorted(path.glob("*.jsonl")))
            files.extend(sorted(path.glob("*.csv")))
        else:
            files.append(path)
    if not files:
        raise click.ClickException("no drive logs found")
    lines = [REPORT_HEADER]
    for path in files:
        try:
            text = path.read_text(encoding="utf-8")
            log = from_csv(text) if path.suffix == ".csv" else from_jsonl(text)
            rep = build_report(log, theta=theta, eps=eps, window=window)
        except (ValidationError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"{path}: {exc}") from None
        meta = log.meta
        kinds = sorted({e["disengagement"] for e in meta.get("tor_events", [])})
        lines.append(f"{meta.get('driver_id', '')},{meta.get('strategy', '')},"
                     f"{';'.join(kinds)},"
                     f"0,{meta.get('spec_name', '')},{_csv_num(rep.rt)},{_csv_num(rep.min_ttc)},"
                     f"{_csv_num(rep.tet)},{_csv_num(rep.tit)},{int(rep.collision)},"
                     f"{_csv_num(rep.ttc_threshold_used)}")
    text = "\n".join(lines) + "\n"
    if out_dir is None:
        click.echo(text, nl=False)
    else:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "reports.csv").write_text(text, encoding="utf-8")
        click.echo(f"wrote {out / 'reports.csv'}")


@main.command("gen-trace")
@click.option("--scenario", default="route_a", show_default=True,
              help="Canonical route name or scenario TOML path.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Trace CSV path (default: <data>/traces/<scenario>.csv).")
def gen_trace_cmd(scenario: str, out_path: str | None) -> None:
    """Synthesize the bundled expert recording for a scenario."""
    try:
        spec = resolve_route(scenario)
        trace = generate_trace(spec)
    except (ConfigError, ValidationError) as exc:
        raise click.ClickException(str(exc)) from None
    out = Path(out_path) if out_path is not None else data_dir() / "traces" / f"{spec.name}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dump_trace(trace), encoding="utf-8")
    click.echo(f"wrote {len(trace)} samples to {out}")


if __name__ == "__main__":
    main()
