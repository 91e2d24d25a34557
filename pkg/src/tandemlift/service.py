"""Live piloting service: WebSocket telemetry out, force commands in.

One simulation loop thread owns all simulation state.  Clients connect over
a persistent WebSocket and exchange line-oriented JSON messages:

    command: {"kind": "apply_force", "force": [x, y, z], "client": "...", "ts": ...}
             kinds: apply_force, clear_force, pause, resume, reset
    frame:   {"v": 1, "t": ..., "state": {...}, "ref": {...}, "S": [...],
              "U": [...], "force": [...], "gated": ...}

An applied force is held in the gate until clear_force or a 2 s timeout
(push-and-release mapping for a UI that cannot exert continuous force).
Commands reach the loop through a single queue drained once per control
step; telemetry fans out through bounded per-client queues that drop the
oldest frame rather than block the loop.
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from starlette.concurrency import run_in_threadpool

from .config import ScenarioConfig
from .sim import CSV_COLUMNS, TelemetryLog, TelemetryRecord, run_scenario

SCHEMA_VERSION = 1
FORCE_HOLD_TIMEOUT = 2.0  # seconds of simulation time
COMMAND_KINDS = ("apply_force", "clear_force", "pause", "resume", "reset")
CLIENT_QUEUE_SIZE = 512


@dataclass
class CommandMessage:
    kind: str
    force: np.ndarray | None = None
    client: str = ""
    ts: float = 0.0

    def __post_init__(self):
        if self.kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command kind {self.kind!r}")
        if self.kind == "apply_force":
            if self.force is None:
                raise ValueError("apply_force requires a force vector")
            self.force = np.asarray(self.force, dtype=float)
            if self.force.shape != (3,) or not np.all(np.isfinite(self.force)):
                raise ValueError("force must be a finite 3-vector")


def parse_command(raw: str) -> CommandMessage:
    """Parse and validate one command line; raises ValueError with detail."""
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("command must be a JSON object")
    if "kind" not in doc:
        raise ValueError("command missing 'kind'")
    return CommandMessage(kind=doc["kind"], force=doc.get("force"),
                          client=str(doc.get("client", "")),
                          ts=float(doc.get("ts", 0.0)))


def frame_from_record(rec: TelemetryRecord) -> dict:
    """Telemetry frame with field names matching the CSV columns."""
    sv = rec.state.as_vector()
    state_names = CSV_COLUMNS[1:13]
    ref_names = CSV_COLUMNS[13:19]
    return {
        "v": SCHEMA_VERSION,
        "t": rec.t,
        "state": {name: float(val) for name, val in zip(state_names, sv)},
        "ref": {name: float(val) for name, val in zip(ref_names, rec.chi_d)},
        "S": [float(x) for x in rec.S],
        "U": [float(x) for x in rec.U],
        "force": [float(x) for x in rec.F_ext],
        "gated": bool(rec.gated),
    }


def error_frame(message: str) -> dict:
    return {"v": SCHEMA_VERSION, "error": message}


class BroadcastHub:
    """Fan-out of frames to per-client bounded queues; never blocks the loop."""

    def __init__(self):
        self._clients: dict[int, queue.Queue] = {}
        self._lock = threading.Lock()
        self._next = 0
        self.dropped = 0
        self.first_client = threading.Event()

    def register(self) -> tuple[int, queue.Queue]:
        q: queue.Queue = queue.Queue(maxsize=CLIENT_QUEUE_SIZE)
        with self._lock:
            cid = self._next
            self._next += 1
            self._clients[cid] = q
        self.first_client.set()
        return cid, q

    def unregister(self, cid: int):
        with self._lock:
            self._clients.pop(cid, None)

    def publish(self, frame: dict):
        with self._lock:
            targets = list(self._clients.values())
        for q in targets:
            try:
                q.put_nowait(frame)
            except queue.Full:
                try:
                    q.get_nowait()
                    self.dropped += 1
                    q.put_nowait(frame)
                except (queue.Empty, queue.Full):
                    self.dropped += 1


class LiveForceSource:
    """Held live force with a simulation-time hold timeout."""

    def __init__(self, hold_timeout: float = FORCE_HOLD_TIMEOUT):
        self.hold_timeout = hold_timeout
        self._force = np.zeros(3)
        self._applied_at: float | None = None

    def apply(self, force: np.ndarray, t: float):
        self._force = np.asarray(force, dtype=float)
        self._applied_at = t

    def clear(self):
        self._force = np.zeros(3)
        self._applied_at = None

    def sample(self, t: float) -> np.ndarray:
        if self._applied_at is not None and t - self._applied_at > self.hold_timeout:
            self.clear()
        return self._force


class SimulationService:
    """Runs the closed loop in a thread with live commands and frame fan-out."""

    def __init__(self, cfg: ScenarioConfig, decimate: int = 20,
                 realtime: bool = True, speed: float = 1.0):
        if decimate < 1:
            raise ValueError("decimation must be >= 1")
        self.cfg = cfg
        self.decimate = decimate
        self.realtime = realtime
        self.speed = speed
        self.hub = BroadcastHub()
        self.commands: queue.Queue[CommandMessage] = queue.Queue()
        self.force = LiveForceSource()
        self._pause = threading.Event()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._reset_requested = False
        self.result = None

    # --- lifecycle -----------------------------------------------------

    def start(self):
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def submit(self, cmd: CommandMessage):
        self.commands.put(cmd)

    def config_frame(self) -> dict:
        return {
            "v": SCHEMA_VERSION,
            "config": {
                "threshold": float(self.cfg.admittance.threshold),
                "dt": float(self.cfg.sim.dt),
                "decimate": self.decimate,
                "mode": "live",
            },
        }

    # --- loop ----------------------------------------------------------

    def _drain_commands(self, t: float):
        latest_force: CommandMessage | None = None
        while True:
            try:
                cmd = self.commands.get_nowait()
            except queue.Empty:
                break
            if cmd.kind == "apply_force":
                latest_force = cmd
            elif cmd.kind == "clear_force":
                latest_force = None
                self.force.clear()
            elif cmd.kind == "pause":
                self._pause.set()
            elif cmd.kind == "resume":
                self._pause.clear()
            elif cmd.kind == "reset":
                self._reset_requested = True
        if latest_force is not None:
            self.force.apply(latest_force.force, t)

    def _run(self):
        while not self._stop.is_set():
            self._reset_requested = False
            self.result = self._run_once()
            if not self._reset_requested:
                break

    def _run_once(self):
        frame_counter = [0]
        step_dt = self.cfg.sim.dt / self.speed
        next_deadline = [time.monotonic()]

        def live(t: float):
            # one drain per control step, latest force wins within the step
            self._drain_commands(t)
            while self._pause.is_set() and not self._stop.is_set():
                time.sleep(0.005)
                self._drain_commands(t)
            if self._stop.is_set() or self._reset_requested:
                raise _LoopInterrupt()
            if self.realtime:
                next_deadline[0] += step_dt
                delay = next_deadline[0] - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            return self.force.sample(t)

        def sink(rec: TelemetryRecord):
            if frame_counter[0] % self.decimate == 0:
                self.hub.publish(frame_from_record(rec))
            frame_counter[0] += 1

        try:
            return run_scenario(self.cfg, live_force=live, frame_sink=sink)
        except _LoopInterrupt:
            return None


class _LoopInterrupt(Exception):
    pass


class ReplayService:
    """Streams a recorded telemetry log; rejects mutation commands."""

    def __init__(self, log: TelemetryLog, speed: float = 1.0, decimate: int = 1):
        if speed <= 0:
            raise ValueError("replay speed must be positive")
        self.log = log
        self.speed = speed
        self.decimate = max(1, decimate)
        self.hub = BroadcastHub()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def config_frame(self) -> dict:
        return {
            "v": SCHEMA_VERSION,
            "config": {"mode": "replay", "speed": self.speed,
                       "decimate": self.decimate,
                       "records": len(self.log)},
        }

    def start(self):
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def _run(self):
        records = self.log.records
        if not records:
            return
        # hold the stream until somebody is listening, so a client started
        # after the CLI sees the log from the first record
        while not self.hub.first_client.wait(timeout=0.1):
            if self._stop.is_set():
                return
        t_start = records[0].t
        wall_start = time.monotonic()
        for i, rec in enumerate(records):
            if self._stop.is_set():
                return
            if i % self.decimate:
                continue
            target = wall_start + (rec.t - t_start) / self.speed
            delay = target - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            self.hub.publish(frame_from_record(rec))


def create_app(service) -> FastAPI:
    """ASGI app exposing the bidirectional telemetry/command channel at /ws."""
    app = FastAPI(title="tandemlift piloting service")
    app.state.service = service

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        await ws.send_text(json.dumps(service.config_frame()))
        cid, q = service.hub.register()

        async def pump_out():
            while True:
                frame = await run_in_threadpool(q.get)
                if frame is None:
                    return
                await ws.send_text(json.dumps(frame))

        out_task = asyncio.create_task(pump_out())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    cmd = parse_command(raw)
                except ValueError as exc:
                    await ws.send_text(json.dumps(error_frame(str(exc))))
                    continue
                if isinstance(service, ReplayService):
                    await ws.send_text(json.dumps(error_frame(
                        "replay mode: commands are not accepted")))
                    continue
                service.submit(cmd)
        except WebSocketDisconnect:
            pass
        finally:
            service.hub.unregister(cid)
            q.put(None)
            out_task.cancel()

    return app
