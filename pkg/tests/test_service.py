"""WebSocket control service: protocol contract and replayability."""

import asyncio
import json
import os
import socket

import websockets

from smartlet_sim.scenario import load_scenario
from smartlet_sim.service import serve_async
from smartlet_sim.trace import replay_trace, trace_hash

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def free_port():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


async def recv_json(ws, timeout=5.0):
    return json.loads(await asyncio.wait_for(ws.recv(), timeout))


async def collect_until(ws, predicate, timeout=10.0, budget=4000):
    seen = []
    for _ in range(budget):
        msg = await recv_json(ws, timeout)
        seen.append(msg)
        if predicate(msg):
            return seen
    raise AssertionError("condition never met; last: %r" % (seen[-5:],))


def run_service_session(scenario_name, session, trace_path=None):
    """Start the service, run the async session(uri) coroutine, tear down."""
    scenario = load_scenario(os.path.join(SCENARIOS, scenario_name + ".json"))
    port = free_port()

    async def driver():
        loop = asyncio.get_running_loop()
        ready = loop.create_future()
        server_task = asyncio.create_task(
            serve_async(scenario, port, trace_path, ready))
        service = await asyncio.wait_for(ready, 10)
        try:
            return await session(f"ws://127.0.0.1:{port}", service)
        finally:
            server_task.cancel()
            try:
                await server_task
            except (asyncio.CancelledError, Exception):
                pass
            service.close()

    return asyncio.run(driver())


class TestServiceProtocol:
    def test_port_busy_exit_code(self):
        import subprocess
        import sys
        port = free_port()
        blocker = socket.socket()
        blocker.bind(("127.0.0.1", port))
        blocker.listen(1)
        try:
            result = subprocess.run(
                [sys.executable, "-m", "smartlet_sim.cli", "serve",
                 "--scenario", os.path.join(SCENARIOS, "empty.json"),
                 "--port", str(port)],
                capture_output=True, text=True, timeout=30)
        finally:
            blocker.close()
        assert result.returncode == 4, result.stderr

    def test_loads_paused_and_steps(self):
        async def session(uri, service):
            async with websockets.connect(uri) as ws:
                first = await recv_json(ws)
                assert first["type"] == "state" and first["tick"] == 0
                for i in range(10):
                    await ws.send(json.dumps(
                        {"type": "control", "action": "step", "id": i}))
                acks = 0
                ticks = 0
                while acks < 10:
                    msg = await recv_json(ws)
                    if msg["type"] == "ack":
                        acks += 1
                    elif msg["type"] == "state":
                        ticks = msg["tick"]
                while ticks < 10:
                    msg = await recv_json(ws)
                    if msg["type"] == "state":
                        ticks = msg["tick"]
                assert ticks == 10
        run_service_session("docking", session)

    def test_every_message_acked_or_errored(self):
        async def session(uri, service):
            async with websockets.connect(uri) as ws:
                await recv_json(ws)
                await ws.send(json.dumps({"type": "control",
                                          "action": "bogus", "id": 1}))
                msgs = await collect_until(ws, lambda m: m.get("ref") == 1)
                assert msgs[-1]["type"] == "error"
                await ws.send(json.dumps({"type": "control",
                                          "action": "step", "id": 2}))
                msgs = await collect_until(ws, lambda m: m.get("ref") == 2)
                assert msgs[-1]["type"] == "ack"
                await ws.send("not json")
                msgs = await collect_until(
                    ws, lambda m: m.get("type") == "error")
                assert "bad JSON" in msgs[-1]["msg"]
        run_service_session("docking", session)

    def test_selective_command_starts_only_matching_agent(self):
        async def session(uri, service):
            async with websockets.connect(uri) as ws:
                await recv_json(ws)
                await ws.send(json.dumps({
                    "v": 1, "type": "command", "kind": "global_light",
                    "rate_hz": 200, "payload": "START", "id": 1}))
                msgs = await collect_until(ws, lambda m: m.get("ref") == 1)
                assert msgs[-1]["type"] == "ack"
                # run until the 200 Hz agent reacts
                await ws.send(json.dumps({"type": "control", "action": "step",
                                          "value": 400, "id": 2}))
                seen = await collect_until(
                    ws, lambda m: m.get("type") == "event"
                    and m.get("kind") == "ModeChange"
                    and m.get("mode") == "Running")
                running = [m for m in seen if m.get("kind") == "ModeChange"]
                assert {m["agent"] for m in running} == {"S3"}
        run_service_session("fig4", session)

    def test_speed_control_validated(self):
        async def session(uri, service):
            async with websockets.connect(uri) as ws:
                await recv_json(ws)
                await ws.send(json.dumps({"type": "control", "action": "speed",
                                          "value": 4.0, "id": 1}))
                msgs = await collect_until(ws, lambda m: m.get("ref") == 1)
                assert msgs[-1]["type"] == "ack"
                assert service.speed == 4.0
                await ws.send(json.dumps({"type": "control", "action": "speed",
                                          "value": -1, "id": 2}))
                msgs = await collect_until(ws, lambda m: m.get("ref") == 2)
                assert msgs[-1]["type"] == "error"
        run_service_session("docking", session)

    def test_two_consoles_identical_streams(self):
        async def session(uri, service):
            async with websockets.connect(uri) as a, \
                    websockets.connect(uri) as b:
                await recv_json(a)
                await recv_json(b)
                await a.send(json.dumps({"type": "control", "action": "step",
                                         "value": 30, "id": 1}))
                states_a = [m for m in await collect_until(
                    a, lambda m: m.get("type") == "state" and m["tick"] >= 30)
                    if m["type"] == "state"]
                states_b = [m for m in await collect_until(
                    b, lambda m: m.get("type") == "state" and m["tick"] >= 30)
                    if m["type"] == "state"]
                assert states_a == states_b
        run_service_session("docking", session)

    def test_served_session_replays_headlessly(self, tmp_path):
        trace_path = str(tmp_path / "served.jsonl")

        async def session(uri, service):
            async with websockets.connect(uri) as ws:
                await recv_json(ws)
                await ws.send(json.dumps({"type": "control", "action": "step",
                                          "value": 50, "id": 1}))
                await collect_until(ws, lambda m: m.get("ref") == 1)
                await ws.send(json.dumps({
                    "type": "command", "kind": "global_light",
                    "rate_hz": 200, "payload": "START", "id": 2}))
                await collect_until(ws, lambda m: m.get("ref") == 2)
                await ws.send(json.dumps({"type": "control", "action": "step",
                                          "value": 450, "id": 3}))
                await collect_until(ws, lambda m: m.get("ref") == 3)

        run_service_session("fig4", session, trace_path=trace_path)
        redo = str(tmp_path / "replayed.jsonl")
        replay_trace(trace_path, redo)
        assert trace_hash(trace_path) == trace_hash(redo)

    def test_program_upload_via_service(self):
        bits = "0" * 58

        async def session(uri, service):
            async with websockets.connect(uri) as ws:
                await recv_json(ws)
                await ws.send(json.dumps({"type": "program", "agent": "S3",
                                          "bits": bits, "id": 4}))
                msgs = await collect_until(ws, lambda m: m.get("ref") == 4)
                assert msgs[-1]["type"] == "ack"
                agent = service.world.agent("S3")
                assert agent.fsm.latched == tuple(int(c) for c in bits)

        run_service_session("fig4", session)
