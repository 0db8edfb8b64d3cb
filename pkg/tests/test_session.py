import asyncio
import json
import threading

import pytest
from websockets.sync.client import connect

from takeover_sim.arbitration import ArbiterConfig, AutomationMode, Disengagement
from takeover_sim.drivelog import to_jsonl
from takeover_sim.dynamics import ControlInput
from takeover_sim.engine import replay_drive, run_drive
from takeover_sim.scenario import oracle_scenario
from takeover_sim.session import (SessionServer, TOR_MESSAGE_MANUAL, TOR_MESSAGE_SHARED,
                                  state_frame)
from takeover_sim import generate_trace

import dataclasses


@pytest.fixture(scope="module")
def short_spec():
    spec = oracle_scenario(target=AutomationMode.MANUAL,
                           disengagement=Disengagement.ORDINARY, duration=20.0)
    return spec


@pytest.fixture(scope="module")
def short_trace(short_spec):
    return generate_trace(short_spec)


class _ServerThread:
    def __init__(self, server: SessionServer):
        self.server = server
        self.ready = threading.Event()
        self.result = None
        self.thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        async def main():
            task = asyncio.create_task(self.server.serve_until_complete())
            while self.server.bound_port is None:
                await asyncio.sleep(0.005)
            self.ready.set()
            self.result = await task
        asyncio.run(main())

    def __enter__(self):
        self.thread.start()
        assert self.ready.wait(5.0), "server did not start"
        return self

    def __exit__(self, *exc):
        self.thread.join(20.0)

    @property
    def url(self):
        return f"ws://127.0.0.1:{self.server.bound_port}"


def _send(ws, obj):
    ws.send(json.dumps(obj) + "\n")


def _drive_scripted(ws, brake_after=1.0, tlx=True):
    """Lock-step client: brake a fixed delay after the request banner."""
    _send(ws, {"type": "ready"})
    tor_time = None
    while True:
        msg = json.loads(ws.recv())
        if msg["type"] == "state":
            if msg["tor"]["active"] and tor_time is None:
                tor_time = msg["t"]
            brake = 0.8 if (tor_time is not None and msg["t"] >= tor_time + brake_after) else 0.0
            _send(ws, {"type": "control", "throttle": 0.0, "brake": brake, "steering": 0.0})
        elif msg["type"] == "end":
            if tlx:
                _send(ws, {"type": "tlx", "mental": 40, "physical": 20, "temporal": 55,
                           "performance": 30, "effort": 45, "frustration": 25})
            return msg


def test_scripted_session_end_to_end(short_spec, short_trace, tmp_path):
    server = SessionServer(short_spec, short_trace, ArbiterConfig(), out_dir=tmp_path,
                           time_scale=0.0, seed=5)
    with _ServerThread(server) as srv:
        with connect(srv.url) as ws:
            end = _drive_scripted(ws, brake_after=1.0)
    assert end["reason"] == "duration"
    res = srv.result
    assert res.complete
    assert res.tlx is not None and res.tlx.overall == pytest.approx(35.833, abs=0.001)
    assert res.log_path is not None and res.log_path.exists()
    assert res.tlx_path is not None and res.tlx_path.exists()
    # the recorded control frames replay headless to the identical log
    again = replay_drive(short_spec, res.log, ArbiterConfig(), short_trace)
    assert to_jsonl(again) == to_jsonl(res.log)
    # and the analyze command turns the persisted log into a complete report
    from click.testing import CliRunner
    from takeover_sim.cli import main as cli_main
    out = CliRunner().invoke(cli_main, ["analyze", "--logs", str(res.log_path)])
    assert out.exit_code == 0, out.output
    lines = out.output.strip().split("\n")
    assert len(lines) == 2
    fields = lines[1].split(",")
    rt_field, min_ttc_field = fields[5], fields[6]
    assert float(rt_field) == pytest.approx(1.0, abs=0.1)
    assert float(min_ttc_field) > 0.0


def test_session_busy_refuses_second_client(short_spec, short_trace, tmp_path):
    server = SessionServer(short_spec, short_trace, ArbiterConfig(), out_dir=tmp_path,
                           time_scale=0.0, seed=6)
    with _ServerThread(server) as srv:
        with connect(srv.url) as ws:
            _send(ws, {"type": "ready"})
            first = json.loads(ws.recv())
            assert first["type"] == "state"
            with connect(srv.url) as ws2:
                refusal = json.loads(ws2.recv())
                assert refusal == {"type": "error", "message": "session busy"}
            _drive_after_first_state(ws)


def _drive_after_first_state(ws):
    while True:
        _send(ws, {"type": "control", "throttle": 0.0, "brake": 0.0, "steering": 0.0})
        msg = json.loads(ws.recv())
        if msg["type"] == "end":
            _send(ws, {"type": "tlx", "mental": 0, "physical": 0, "temporal": 0,
                       "performance": 0, "effort": 0, "frustration": 0})
            return


def test_silent_client_equals_zero_driver(short_spec, short_trace, tmp_path):
    # a connected client that never sends controls produces the same log as a
    # headless run with an all-zero input stream
    spec = dataclasses.replace(short_spec, duration=2.0)
    trace = generate_trace(spec)
    server = SessionServer(spec, trace, ArbiterConfig(), out_dir=tmp_path,
                           time_scale=0.2, seed=7)
    with _ServerThread(server) as srv:
        with connect(srv.url) as ws:
            _send(ws, {"type": "ready"})
            while True:
                msg = json.loads(ws.recv())
                if msg["type"] == "end":
                    _send(ws, {"type": "tlx", "mental": 5, "physical": 5, "temporal": 5,
                               "performance": 5, "effort": 5, "frustration": 5})
                    break
    headless = run_drive(spec, [ControlInput()] * spec.n_ticks, ArbiterConfig(), trace,
                         seed=7, driver_id="human")
    assert to_jsonl(srv.result.log) == to_jsonl(headless)


def test_disconnect_aborts_and_persists(short_spec, short_trace, tmp_path):
    server = SessionServer(short_spec, short_trace, ArbiterConfig(), out_dir=tmp_path,
                           time_scale=0.0, seed=8)
    with _ServerThread(server) as srv:
        ws = connect(srv.url)
        _send(ws, {"type": "ready"})
        json.loads(ws.recv())
        _send(ws, {"type": "control", "throttle": 0.0, "brake": 0.0, "steering": 0.0})
        json.loads(ws.recv())
        ws.close()
    res = srv.result
    assert not res.complete
    assert res.log.meta["termination"] == "disconnect"
    assert res.log_path is not None and res.log_path.exists()
    assert res.tlx is None


def test_state_frame_shape_and_messages(short_spec, short_trace):
    from takeover_sim.engine import Simulation
    sim = Simulation(short_spec, short_trace, ArbiterConfig())
    sim.begin_tick()  # fires the t=0 request (target MANUAL here)
    frame = state_frame(sim)
    assert frame["type"] == "state"
    assert frame["mode"] == "MANUAL"
    assert frame["hmi"] == "off"
    assert frame["tor"] == {"active": True, "target": "MANUAL",
                            "message": TOR_MESSAGE_MANUAL}
    assert set(frame["ego"]) == {"s", "lat", "v", "a"}
    assert set(frame["lead"]) == {"s", "v", "a"}


def test_tor_messages_verbatim():
    assert TOR_MESSAGE_MANUAL == ("Autonomous driving ends. "
                                  "Please resume full control of the vehicle")
    assert TOR_MESSAGE_SHARED == ("Shared driving is activated. "
                                  "Please resume control of the vehicle")
