"""FastAPI service: batch endpoints plus the live operator session.

The live session owns one Simulation and paces it against the wall clock
(real-time factor configurable). Browser clients talk JSON WireMessages
over /ws: inbound "command" messages map onto the operator-output schema
and take effect at the next tick, inbound "config" messages switch the
channel degradation live; outbound "state" messages leave at 60 Hz
regardless of the simulation rate, through bounded per-client queues that
drop the oldest frame rather than ever stalling the simulation clock.

Every applied command is recorded with the tick it took effect, which makes
a live session replayable in batch, bit for bit.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
import time
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .environment import FRAME_STIFFNESS  # noqa: F401  (re-export for UI)
from .operators import OperatorOutput
from .service import (
    AnalysisError,
    AnalyzeRequest,
    GridRequest,
    ReplayRequest,
    RunRequest,
    do_analyze,
    do_grid,
    do_replay,
    do_run,
    health,
)
from .simulation import ConfigError, SimConfig, Simulation, SimulationAbort

log = logging.getLogger(__name__)

STATE_RATE_HZ = 60.0
CLIENT_QUEUE_DEPTH = 3
MAX_BURST_TICKS = 2048

LIVE_DEFAULT = {
    "dt": 1e-3,
    "duration": 300.0,
    "scenario": {"kind": "button_press", "scripted": False},
    "stop_on_done": False,
}


def _command_from_payload(payload: dict) -> OperatorOutput:
    def pair(name, default=(0.0, 0.0)):
        v = payload.get(name, default)
        if (not isinstance(v, (list, tuple)) or len(v) != 2
                or not all(isinstance(x, (int, float)) for x in v)):
            raise ValueError(f"{name} must be a pair of numbers")
        x, y = float(v[0]), float(v[1])
        if not (abs(x) < 1e3 and abs(y) < 1e3):
            raise ValueError(f"{name} out of range")
        return (x, y)

    return OperatorOutput(
        master_err=pair("master_err"),
        gripper_held=bool(payload.get("gripper_held", False)),
        hand_attached=bool(payload.get("hand_attached", True)),
        external_impulse=pair("external_impulse"),
        pose_nudge=pair("pose_nudge"),
    )


class LiveSession:
    """One simulation clock, many subscribers."""

    def __init__(self, config: SimConfig, rtf: float = 1.0,
                 session_id: str = "default"):
        self.session_id = session_id
        self.config = config
        self.sim = Simulation(config)
        self.rtf = rtf
        self.records: list[tuple[int, str, dict]] = []
        self.override: OperatorOutput | None = None
        self.subscribers: list[asyncio.Queue] = []
        self.seq_out = 0
        self.last_seq_in: dict[int, int] = {}
        self._task: asyncio.Task | None = None
        self._stop = False
        self.decimate = max(1, round(1.0 / (STATE_RATE_HZ * config.dt)))

    # -- stepping ---------------------------------------------------------

    def apply_command(self, payload: dict):
        cmd = _command_from_payload(payload)
        self.records.append((self.sim.n, "command", payload))
        self.override = cmd

    def apply_channels(self, payload: dict):
        delay = float(payload.get("delay", 0.0))
        rate = float(payload.get("rate", 0.0))
        if delay < 0 or rate < 0:
            raise ValueError("delay and rate must be >= 0")
        self.records.append((self.sim.n, "channels",
                             {"delay": delay, "rate": rate}))
        self.sim.set_channel_conditions(delay, rate)

    def advance(self, ticks: int):
        for _ in range(ticks):
            if self.sim.finished():
                break
            self.sim.step(op_override=self.override)

    # -- messaging --------------------------------------------------------

    def _message(self, mtype: str, payload: dict) -> str:
        self.seq_out += 1
        return json.dumps({"type": mtype, "seq": self.seq_out,
                           "t": round(self.sim.t, 9), "payload": payload})

    def hello_payload(self) -> dict:
        sim = self.sim
        return {
            "version_note": "scene description",
            "links": [l.length for l in sim.model.links],
            "workspace_radius": sim.master_params.workspace_radius,
            "home": list(map(float, sim.js.q)),
            "objects": [
                {"name": o.name, "kind": o.kind, "is_button": o.is_button,
                 "point": list(o.point), "normal": list(o.normal),
                 "bounds": list(o.bounds)}
                for o in sim.objects],
            "dt": sim.dt,
            "conditions": {"delay": sim.cfg_fb.delay,
                           "rate": sim.cfg_fb.sample_rate},
        }

    def state_payload(self) -> dict:
        from .dynamics import forward_kinematics
        from .fic import Phase
        sim = self.sim
        pose = forward_kinematics(sim.model, sim.js.q)
        return {
            "tick": sim.n,
            "q": [float(v) for v in sim.js.q],
            "ee": [float(pose[0]), float(pose[1])],
            "xd": [float(v) for v in sim.ch_xd.held_value],
            "master": [float(sim.master_x[0]), float(sim.master_x[1])],
            "ffb": [float(v) for v in sim.ch_fb.held_value],
            "buttons": [bool(l.active) for l in sim.latches],
            "phases": [1 if s.phase is Phase.CONVERGENCE else 0
                       for s in sim.fic_states],
            "conditions": {"delay": sim.cfg_fb.delay,
                           "rate": sim.cfg_fb.sample_rate},
        }

    def broadcast_state(self):
        msg = self._message("state", self.state_payload())
        for q in self.subscribers:
            if q.full():
                try:
                    q.get_nowait()  # drop the oldest frame, never block
                except asyncio.QueueEmpty:
                    pass
            q.put_nowait(msg)

    # -- pacing loop ------------------------------------------------------

    async def loop(self):
        dt = self.sim.dt
        origin_wall = time.perf_counter()
        origin_tick = self.sim.n
        next_state = 0
        # keep each blocking burst short so HTTP/WS handlers never starve,
        # whatever the real-time factor
        chunk = 256
        while not self._stop and not self.sim.finished():
            now = time.perf_counter()
            due = origin_tick + int((now - origin_wall) * self.rtf / dt)
            if due - self.sim.n > MAX_BURST_TICKS:
                # fell behind (slow host or debugger): resynchronise
                origin_wall = now
                origin_tick = self.sim.n
                due = self.sim.n + MAX_BURST_TICKS
            stop_at = min(due, self.sim.n + chunk)
            while self.sim.n < stop_at and not self.sim.finished():
                self.sim.step(op_override=self.override)
                if self.sim.n >= next_state:
                    self.broadcast_state()
                    next_state = self.sim.n + self.decimate
            if self.sim.n < due:
                await asyncio.sleep(0)  # yield, more work pending
            else:
                await asyncio.sleep(min(0.004, dt / self.rtf))

    def start(self):
        if self._task is None or self._task.done():
            self._stop = False
            self._task = asyncio.get_event_loop().create_task(self.loop())

    async def stop(self):
        self._stop = True
        if self._task is not None:
            try:
                await self._task
            except asyncio.CancelledError:
                pass


_FALLBACK_PAGE = """<!doctype html>
<html><head><title>teleopsim</title></head>
<body><h1>teleopsim service</h1>
<p>The operator console bundle is not built. Build it with
<code>cd frontend && npm install && npm run build</code>, then restart the
server. The WebSocket endpoint is at <code>/ws</code>; the REST API lives
under <code>/api/</code>.</p></body></html>"""


def _ui_dir() -> Path | None:
    env = os.environ.get("TELEOPSIM_UI_DIR")
    if env and Path(env).is_dir():
        return Path(env)
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if candidate.is_dir():
        return candidate
    return None


def create_app(live_config: dict | None = None, rtf: float = 1.0,
               autostart: bool = True) -> FastAPI:
    from contextlib import asynccontextmanager

    cfg = SimConfig.from_dict({**LIVE_DEFAULT, **(live_config or {})})
    session = LiveSession(cfg, rtf=rtf)

    @asynccontextmanager
    async def lifespan(_app):
        if autostart:
            session.start()
        yield
        await session.stop()

    app = FastAPI(title="teleopsim", version=health()["version"],
                  lifespan=lifespan)
    app.state.session = session

    @app.get("/api/health")
    def api_health():
        return health()

    @app.post("/api/run")
    def api_run(req: RunRequest):
        try:
            return do_run(req)
        except ConfigError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        except SimulationAbort as exc:
            return JSONResponse(status_code=500,
                                content={"error": str(exc)})

    @app.post("/api/grid")
    def api_grid(req: GridRequest):
        try:
            return do_grid(req)
        except ConfigError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/api/analyze")
    def api_analyze(req: AnalyzeRequest):
        try:
            return do_analyze(req)
        except AnalysisError as exc:
            return JSONResponse(status_code=422,
                                content={"error": str(exc)})

    @app.post("/api/replay")
    def api_replay(req: ReplayRequest):
        try:
            return do_replay(req)
        except ConfigError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/api/session")
    def api_session():
        return {"id": session.session_id,
                "tick": session.sim.n, "t": session.sim.t,
                "clients": len(session.subscribers),
                "records": len(session.records),
                "state": session.state_payload()}

    @app.post("/api/session/advance")
    def api_advance(body: dict):
        """Deterministic test hook: step the paused/live session N ticks in
        place (the event loop serialises this against the pacing task)."""
        ticks = int(body.get("ticks", 0))
        if not 0 < ticks <= 1_000_000:
            return JSONResponse(status_code=400,
                                content={"error": "ticks out of range"})
        if body.get("command") is not None:
            try:
                session.apply_command(body["command"])
            except ValueError as exc:
                return JSONResponse(status_code=400,
                                    content={"error": str(exc)})
        if body.get("channels") is not None:
            session.apply_channels(body["channels"])
        session.advance(ticks)
        return {"tick": session.sim.n, "t": session.sim.t}

    @app.get("/api/session/recording")
    def api_recording():
        return {"config": session.config.to_dict(),
                "ticks": session.sim.n,
                "records": [[t, k, p] for t, k, p in session.records]}

    @app.post("/api/session/replay-check")
    def api_replay_check():
        """Re-run the recorded command stream in batch and compare with the
        live session's log, byte for byte."""
        from .simulation import run as batch_run
        live_bytes = session.sim.make_log().to_csv_bytes()
        schedule = []
        for tick, kind, payload in session.records:
            if kind == "command":
                schedule.append((tick, "command",
                                 _command_from_payload(payload)))
            else:
                schedule.append((tick, kind, payload))
        batch = batch_run(session.config, command_schedule=schedule,
                          max_ticks=session.sim.n)
        identical = batch.to_csv_bytes() == live_bytes
        return {"identical": identical, "ticks": session.sim.n}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=CLIENT_QUEUE_DEPTH)
        session.subscribers.append(queue)
        client = id(ws)
        session.last_seq_in[client] = 0
        await ws.send_text(session._message("config",
                                            session.hello_payload()))

        async def pump_out():
            while True:
                msg = await queue.get()
                await ws.send_text(msg)

        sender = asyncio.get_event_loop().create_task(pump_out())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(session._message(
                        "event", {"warning": "malformed JSON ignored"}))
                    continue
                seq = msg.get("seq", 0)
                if not isinstance(seq, int) \
                        or seq <= session.last_seq_in[client]:
                    await ws.send_text(session._message(
                        "event",
                        {"warning": f"non-increasing seq {seq} dropped"}))
                    continue
                session.last_seq_in[client] = seq
                mtype = msg.get("type")
                payload = msg.get("payload", {})
                try:
                    if mtype == "command":
                        session.apply_command(payload)
                    elif mtype == "config":
                        session.apply_channels(payload)
                    else:
                        await ws.send_text(session._message(
                            "event",
                            {"warning": f"unknown type {mtype!r} ignored"}))
                except (ValueError, ConfigError) as exc:
                    await ws.send_text(session._message(
                        "event", {"warning": f"rejected: {exc}"}))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            session.subscribers.remove(queue)
            session.last_seq_in.pop(client, None)

    ui = _ui_dir()
    if ui is not None:
        app.mount("/", StaticFiles(directory=str(ui), html=True),
                  name="ui")
    else:
        @app.get("/")
        def index() -> HTMLResponse:
            return HTMLResponse(_FALLBACK_PAGE)

    return app


def serve(port: int = 8000, host: str = "127.0.0.1",
          live_config: dict | None = None, rtf: float = 1.0):
    import uvicorn

    app = create_app(live_config=live_config, rtf=rtf)
    uvicorn.run(app, host=host, port=port, log_level="info")
