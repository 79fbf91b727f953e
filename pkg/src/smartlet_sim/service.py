"""Live control service: one simulation, many consoles, JSON over WebSocket.

The scenario loads paused.  Inbound messages are funneled through a single
queue and applied only at tick boundaries, each answered by exactly one ack
or error; every applied command is also written to the trace so a served
session can be replayed headlessly.  State snapshots stream to every
connected console at no more than 30 per second of wall time.

Wire messages (one JSON object per WebSocket message):

  in:  {"v":1,"type":"command","kind":"global_light","rate_hz":200,
        "payload":"START|STOP|SEND|<bits>","duration_s":2,"id":7}
       {"type":"program","agent":"S3","bits":"<58 chars>","id":8}
       {"type":"control","action":"pause|resume|step|reset|speed",
        "value":10,"id":9}
  out: {"type":"state","tick":N,"agents":[...]}
       {"type":"event",...}
       {"type":"ack","ref":7}
       {"type":"error","msg":"...","ref":9}
"""

from __future__ import annotations

import asyncio
import json

from .engine import step
from .errors import SmartletSimError
from .scenario import Scenario, build_world
from .trace import TraceWriter, apply_command, state_record

SNAPSHOT_HZ = 30.0


class SimulationService:
    def __init__(self, scenario: Scenario, trace_path: str | None = None):
        self.scenario = scenario
        self.world = build_world(scenario)
        self.running = False
        self.speed = 1.0          # simulated seconds per wall second
        self.clients: set = set()
        self.queue: asyncio.Queue = asyncio.Queue()
        self._events_sent = 0
        self._trace_sink = None
        self.writer = None
        if trace_path:
            # Line-buffered so every record survives an abrupt shutdown.
            self._trace_sink = open(trace_path, "w", buffering=1)
            self.writer = TraceWriter(self._trace_sink, scenario.raw,
                                      self.world.seed, scenario.decimation)

    # -- engine driving ----------------------------------------------------

    def _advance(self, ticks: int) -> None:
        for _ in range(ticks):
            step(self.world)
            if self.writer is not None:
                self.writer.on_tick(self.world)

    def _apply(self, message: dict) -> None:
        kind = message.get("type")
        if kind in ("command", "program"):
            payload = dict(message)
            payload.pop("id", None)
            payload.pop("v", None)
            if kind == "command":
                if payload.get("kind", "global_light") != "global_light":
                    raise SmartletSimError(
                        f"unknown command kind {payload.get('kind')!r}")
                apply_command(self.world,
                              {"type": "command",
                               "payload": payload["payload"],
                               "rate_hz": payload["rate_hz"],
                               "duration_s": payload.get("duration_s")},
                              self.writer)
            else:
                apply_command(self.world,
                              {"type": "program", "agent": payload["agent"],
                               "bits": payload["bits"]}, self.writer)
            return
        if kind == "control":
            action = message.get("action")
            if action == "pause":
                self.running = False
            elif action == "resume":
                self.running = True
            elif action == "step":
                self._advance(max(1, int(message.get("value", 1))))
            elif action == "reset":
                self.world = build_world(self.scenario)
                self._events_sent = 0
                self.running = False
            elif action == "speed":
                value = float(message.get("value", 1.0))
                if value <= 0:
                    raise SmartletSimError("speed must be positive")
                self.speed = value
            else:
                raise SmartletSimError(f"unknown control action {action!r}")
            return
        raise SmartletSimError(f"unknown message type {kind!r}")

    # -- fan-out -----------------------------------------------------------

    async def _broadcast(self, record: dict) -> None:
        if not self.clients:
            return
        text = json.dumps(record, separators=(",", ":"), sort_keys=True)
        stale = []
        for ws in self.clients:
            try:
                await ws.send(text)
            except Exception:
                stale.append(ws)
        for ws in stale:
            self.clients.discard(ws)

    async def _flush_outputs(self) -> None:
        for event in self.world.event_log[self._events_sent:]:
            await self._broadcast({"type": "event", **event})
        self._events_sent = len(self.world.event_log)
        await self._broadcast(state_record(self.world))

    async def run_loop(self) -> None:
        interval = 1.0 / SNAPSHOT_HZ
        ticks_per_snapshot = max(
            1, round(self.speed / (SNAPSHOT_HZ * self.world.physics_dt_ns * 1e-9)))
        while True:
            progressed = False
            while not self.queue.empty():
                ws, message = await self.queue.get()
                ref = message.get("id")
                try:
                    self._apply(message)
                    reply = {"type": "ack"}
                    if ref is not None:
                        reply["ref"] = ref
                except (SmartletSimError, KeyError, ValueError) as exc:
                    reply = {"type": "error", "msg": str(exc)}
                    if ref is not None:
                        reply["ref"] = ref
                try:
                    await ws.send(json.dumps(reply, separators=(",", ":"),
                                             sort_keys=True))
                except Exception:
                    pass
                progressed = True
            if self.running:
                ticks_per_snapshot = max(1, round(
                    self.speed / (SNAPSHOT_HZ * self.world.physics_dt_ns * 1e-9)))
                self._advance(ticks_per_snapshot)
                progressed = True
            if progressed:
                await self._flush_outputs()
            await asyncio.sleep(interval if self.running else 0.01)

    async def handle_client(self, ws) -> None:
        self.clients.add(ws)
        try:
            await ws.send(json.dumps(state_record(self.world),
                                     separators=(",", ":"), sort_keys=True))
            async for text in ws:
                try:
                    message = json.loads(text)
                except json.JSONDecodeError as exc:
                    await ws.send(json.dumps(
                        {"type": "error", "msg": f"bad JSON: {exc.msg}"}))
                    continue
                await self.queue.put((ws, message))
        finally:
            self.clients.discard(ws)

    def close(self) -> None:
        if self.writer is not None:
            self.writer.close(self.world.tick)
            self.writer = None
        if self._trace_sink is not None:
            self._trace_sink.close()
            self._trace_sink = None


async def serve_async(scenario: Scenario, port: int,
                      trace_path: str | None = None, ready=None,
                      install_signals: bool = False):
    import signal

    import websockets

    service = SimulationService(scenario, trace_path)
    loop_task = asyncio.create_task(service.run_loop())
    if install_signals:
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGTERM, signal.SIGINT):
            loop.add_signal_handler(sig, loop_task.cancel)
    async with websockets.serve(service.handle_client, "127.0.0.1", port):
        if ready is not None:
            ready.set_result(service)
        try:
            await loop_task
        except asyncio.CancelledError:
            pass
        finally:
            loop_task.cancel()
            service.close()


def serve_scenario(scenario: Scenario, port: int,
                   trace_path: str | None = None) -> None:
    try:
        asyncio.run(serve_async(scenario, port, trace_path,
                                install_signals=True))
    except KeyboardInterrupt:
        pass
