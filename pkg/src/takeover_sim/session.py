"""Real-time session server bridging the engine to a browser cockpit.

One WebSocket client drives one scripted drive. The server owns the
authoritative fixed-rate loop (20 Hz wall time by default), broadcasts state
frames, applies the latest received control frame each tick, and after the
drive requests a workload (TLX) submission before persisting the log.

Wire protocol: newline-delimited JSON messages over the socket.
  server -> client:
    {"type":"state","t":..,"ego":{..},"lead":{..},"mode":"AUTO|SHARED|MANUAL",
     "tor":{"active":bool,"target":..,"message":..},"hmi":"blue|amber|off"}
    {"type":"end","reason":..,"tlx_required":true}
    {"type":"error","message":"session busy"}
  client -> server:
    {"type":"ready"} | {"type":"control","throttle":x,"brake":x,"steering":x}
    | {"type":"tlx","mental":..,"physical":..,"temporal":..,"performance":..,
       "effort":..,"frustration":..}

With time_scale=0 the loop runs lock-step (one control frame per tick, no
sleeping), which keeps scripted test clients fast and deterministic.
"""
from __future__ import annotations

import asyncio
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed


class _Disconnect(Exception):
    """Client went away (or stopped responding) mid-session."""

from .arbitration import ArbiterConfig, AutomationMode
from .drivelog import DriveLog, to_jsonl
from .dynamics import ControlInput, ZERO_INPUT, clamp_control
from .engine import DEFAULT_SUB_STEPS, Simulation
from .errors import ValidationError
from .expert import ExpertTrace, MatchConfig
from .metrics import TlxRating
from .scenario import ScenarioSpec

TOR_MESSAGE_MANUAL = "Autonomous driving ends. Please resume full control of the vehicle"
TOR_MESSAGE_SHARED = "Shared driving is activated. Please resume control of the vehicle"
TOR_DISPLAY_SECONDS = 3.0  # how long the request banner stays on the dashboard
HMI_COLOR = {AutomationMode.AUTO: "blue", AutomationMode.SHARED: "amber",
             AutomationMode.MANUAL: "off"}
MAX_DRIFT_TICKS = 5  # wall-clock lag that aborts the session instead of warping


def state_frame(sim: Simulation) -> dict[str, Any]:
    """Server state message for the tick about to run (after transitions)."""
    tor = sim.active_tor
    tor_active = tor is not None and (sim.t - tor.t_issued) <= TOR_DISPLAY_SECONDS
    if tor_active:
        message = (TOR_MESSAGE_MANUAL if tor.target is AutomationMode.MANUAL
                   else TOR_MESSAGE_SHARED)
        tor_obj = {"active": True, "target": tor.target.value, "message": message}
    else:
        tor_obj = {"active": False, "target": None, "message": ""}
    return {
        "type": "state",
        "t": sim.t,
        "ego": {"s": sim.ego_s, "lat": sim.ego_lat, "v": sim.ego_v, "a": sim.ego_a},
        "lead": {"s": sim.lead.s, "v": sim.lead.v, "a": sim.lead.a},
        "mode": sim.mode.value,
        "tor": tor_obj,
        "hmi": HMI_COLOR[sim.mode],
    }


def parse_control(msg: dict[str, Any]) -> ControlInput | None:
    try:
        throttle = float(msg.get("throttle", 0.0))
        brake = float(msg.get("brake", 0.0))
        steering = float(msg.get("steering", 0.0))
    except (TypeError, ValueError):
        return None
    if not (math.isfinite(throttle) and math.isfinite(brake) and math.isfinite(steering)):
        return None
    return clamp_control(throttle, brake, steering)


def parse_tlx(msg: dict[str, Any]) -> TlxRating | None:
    try:
        return TlxRating(
            mental=float(msg["mental"]), physical=float(msg["physical"]),
            temporal=float(msg["temporal"]), performance=float(msg["performance"]),
            effort=float(msg["effort"]), frustration=float(msg["frustration"]))
    except (KeyError, TypeError, ValueError, ValidationError):
        return None


@dataclass
class SessionResult:
    log: DriveLog
    log_path: Path | None
    tlx: TlxRating | None
    tlx_path: Path | None
    complete: bool


class SessionServer:
    """Serves exactly one drive session, refusing concurrent clients."""

    def __init__(self, spec: ScenarioSpec, trace: ExpertTrace,
                 arb_cfg: ArbiterConfig | None = None,
                 match_cfg: MatchConfig | None = None,
                 out_dir: str | Path | None = None,
                 host: str = "127.0.0.1", port: int = 0,
                 time_scale: float = 1.0, seed: int = 0,
                 control_timeout: float = 30.0,
                 sub_steps: int = DEFAULT_SUB_STEPS) -> None:
        self.spec = spec
        self.trace = trace
        self.arb_cfg = arb_cfg or ArbiterConfig()
        self.match_cfg = match_cfg
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.host = host
        self.port = port
        self.time_scale = time_scale
        self.seed = seed
        self.control_timeout = control_timeout
        self.sub_steps = sub_steps
        self.bound_port: int | None = None
        self.result: SessionResult | None = None
        self._busy = False
        self._done = asyncio.Event()

    async def serve_until_complete(self) -> SessionResult:
        """Listen, run one full session, and return its result."""
        async with serve(self._handler, self.host, self.port) as server:
            self.bound_port = server.sockets[0].getsockname()[1]
            await self._done.wait()
        assert self.result is not None
        return self.result

    async def _handler(self, ws) -> None:
        if self._busy:
            try:
                await ws.send(json.dumps(
                    {"type": "error", "message": "session busy"}) + "\n")
                await ws.close()
            except ConnectionClosed:
                pass
            return
        self._busy = True
        try:
            self.result = await self._run_session(ws)
        finally:
            self._busy = False
            self._done.set()

    async def _run_session(self, ws) -> SessionResult:
        inbox: asyncio.Queue = asyncio.Queue()
        closed = asyncio.Event()

        async def reader() -> None:
            try:
                async for raw in ws:
                    if isinstance(raw, bytes):
                        raw = raw.decode("utf-8", errors="replace")
                    for line in raw.split("\n"):
                        line = line.strip()
                        if not line:
                            continue
                        try:
                            msg = json.loads(line)
                        except json.JSONDecodeError:
                            continue
                        if isinstance(msg, dict):
                            await inbox.put(msg)
            except ConnectionClosed:
                pass
            finally:
                closed.set()

        reader_task = asyncio.create_task(reader())
        sim = Simulation(self.spec, self.trace, self.arb_cfg, self.match_cfg,
                         seed=self.seed, driver_id="human", sub_steps=self.sub_steps)
        tlx: TlxRating | None = None
        latest = ZERO_INPUT
        try:
            tlx = await self._drive_and_collect(ws, sim, inbox, closed, latest)
        except (ConnectionClosed, _Disconnect):
            pass
        finally:
            reader_task.cancel()
        if not sim.done:
            sim.abort("disconnect")
        complete = sim.termination != "disconnect" and tlx is not None
        log_path = tlx_path = None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            base = f"session_{self.spec.name}_{self.seed}"
            log_path = self.out_dir / f"{base}.jsonl"
            log_path.write_text(to_jsonl(sim.log), encoding="utf-8")
            if tlx is not None:
                tlx_path = self.out_dir / f"{base}_tlx.json"
                tlx_path.write_text(json.dumps({
                    "mental": tlx.mental, "physical": tlx.physical,
                    "temporal": tlx.temporal, "performance": tlx.performance,
                    "effort": tlx.effort, "frustration": tlx.frustration,
                    "overall": tlx.overall}, sort_keys=True) + "\n", encoding="utf-8")
        try:
            await ws.close()
        except ConnectionClosed:
            pass
        return SessionResult(sim.log, log_path, tlx, tlx_path, complete)

    async def _drive_and_collect(self, ws, sim: Simulation, inbox: asyncio.Queue,
                                 closed: asyncio.Event, latest: ControlInput) -> TlxRating | None:
        tlx: TlxRating | None = None

        # the drive starts when the client reports ready
        while True:
            msg = await self._next_message(inbox, closed, self.control_timeout)
            if msg is None:
                raise _Disconnect
            if msg.get("type") == "ready":
                break

        loop = asyncio.get_running_loop()
        start = loop.time()
        dt_wall = self.spec.dt * self.time_scale
        while not sim.done:
            sim.begin_tick()
            await ws.send(json.dumps(state_frame(sim)) + "\n")
            if self.time_scale == 0.0:
                got = await self._await_control(inbox, closed)
                if got is None:
                    raise _Disconnect
                control, tlx_msg = got
                if control is not None:
                    latest = control
                if tlx_msg is not None:
                    tlx = tlx_msg
            else:
                while not inbox.empty():
                    msg = inbox.get_nowait()
                    kind = msg.get("type")
                    if kind == "control":
                        parsed = parse_control(msg)
                        if parsed is not None:
                            latest = parsed
                    elif kind == "tlx":
                        parsed_tlx = parse_tlx(msg)
                        if parsed_tlx is not None:
                            tlx = parsed_tlx
                if closed.is_set():
                    raise _Disconnect
            sim.finish_tick(latest)
            if self.time_scale > 0.0:
                target = start + sim.k * dt_wall
                now = loop.time()
                if now - target > MAX_DRIFT_TICKS * dt_wall:
                    sim.abort("overrun")
                    break
                if target > now:
                    await asyncio.sleep(target - now)

        if sim.termination not in (None, "disconnect", "overrun"):
            await ws.send(json.dumps({
                "type": "end", "reason": sim.termination, "tlx_required": True}) + "\n")
            while tlx is None:
                msg = await self._next_message(inbox, closed, self.control_timeout)
                if msg is None:
                    break
                if msg.get("type") == "tlx":
                    tlx = parse_tlx(msg)
        return tlx

    async def _await_control(self, inbox: asyncio.Queue, closed: asyncio.Event):
        """Lock-step intake: wait for the next control frame, remembering any
        TLX that arrives early."""
        tlx: TlxRating | None = None
        while True:
            msg = await self._next_message(inbox, closed, self.control_timeout)
            if msg is None:
                return None
            kind = msg.get("type")
            if kind == "control":
                return parse_control(msg), tlx
            if kind == "tlx":
                tlx = parse_tlx(msg)

    @staticmethod
    async def _next_message(inbox: asyncio.Queue, closed: asyncio.Event,
                            timeout: float) -> dict[str, Any] | None:
        get = asyncio.create_task(inbox.get())
        wait_closed = asyncio.create_task(closed.wait())
        done, pending = await asyncio.wait(
            {get, wait_closed}, timeout=timeout, return_when=asyncio.FIRST_COMPLETED)
        if get in done:
            wait_closed.cancel()
            return get.result()
        get.cancel()
        wait_closed.cancel()
        return None


def serve_session(spec: ScenarioSpec, trace: ExpertTrace,
                  arb_cfg: ArbiterConfig | None = None, *,
                  port: int = 8765, host: str = "127.0.0.1",
                  out_dir: str | Path | None = None, time_scale: float = 1.0,
                  seed: int = 0) -> SessionResult:
    """Blocking entry point: serve one live session and return its result."""
    server = SessionServer(spec, trace, arb_cfg, out_dir=out_dir, host=host,
                           port=port, time_scale=time_scale, seed=seed)
    return asyncio.run(server.serve_until_complete())
