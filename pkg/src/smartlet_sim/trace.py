"""Trace files: JSONL run records and the headless replay.

A trace starts with a header carrying the full scenario and seed, then per
tick (decimated) a state record for every agent, event records as they
happen, and a record for every externally applied command.  Replays rebuild
the world from the header and re-apply the recorded commands at their ticks,
which must reproduce the original trace byte for byte.
"""

from __future__ import annotations

import hashlib
import json

from .engine import TankState, inject_global_light, step
from .errors import TraceIOError
from .fsm import deserialize
from .scenario import Scenario, build_world

FORMAT_VERSION = 1


def state_record(world: TankState) -> dict:
    agents = []
    for a in world.agents:
        bonds = [{"peer": b.b if b.a == a.id else b.a,
                  "face": b.faces[0] if b.a == a.id else b.faces[1],
                  "score": b.score}
                 for b in world.bonds if a.id in (b.a, b.b)]
        agents.append({
            "id": a.id,
            "pos": [round(v, 9) for v in a.body.position_m],
            "gas_nl": round(a.body.gas_volume_m3 * 1e12, 6),
            "mode": a.fsm.mode.value,
            "phase": a.fsm.phase_index,
            "leds": {"g": a.led_green, "r": a.led_red},
            "at_surface": a.body.at_surface,
            "on_floor": a.body.on_floor,
            "bonds": bonds,
        })
    return {"type": "state", "tick": world.tick, "agents": agents}


class TraceWriter:
    def __init__(self, sink, scenario_raw: dict, seed: int, decimation: int = 1):
        self.sink = sink
        self.decimation = max(1, decimation)
        self._events_seen = 0
        self._write({"type": "header", "v": FORMAT_VERSION,
                     "seed": seed, "decimation": self.decimation,
                     "scenario": scenario_raw})

    def _write(self, record: dict) -> None:
        try:
            self.sink.write(json.dumps(record, separators=(",", ":"),
                                       sort_keys=True) + "\n")
        except OSError as exc:
            raise TraceIOError(f"trace write failed: {exc}")

    def on_tick(self, world: TankState) -> None:
        """Call after each engine step."""
        for event in world.event_log[self._events_seen:]:
            self._write({"type": "event", **event})
        self._events_seen = len(world.event_log)
        if (world.tick - 1) % self.decimation == 0:
            self._write(state_record(world))

    def command(self, world: TankState, message: dict) -> None:
        self._write({"type": "command_applied", "tick": world.tick,
                     "msg": message})

    def close(self, final_tick: int | None = None) -> None:
        if final_tick:  # zero-tick runs stay header-only
            self._write({"type": "end", "tick": final_tick})
        try:
            self.sink.flush()
        except OSError as exc:
            raise TraceIOError(f"trace flush failed: {exc}")


def read_trace(path: str):
    records = []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
    except OSError as exc:
        raise TraceIOError(str(exc))
    return records


def trace_hash(path: str) -> str:
    sha = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(65536), b""):
                sha.update(chunk)
    except OSError as exc:
        raise TraceIOError(str(exc))
    return sha.hexdigest()


def apply_command(world: TankState, message: dict, writer: TraceWriter | None = None):
    """Apply one external command at the current tick boundary and record it."""
    kind = message.get("type")
    if kind == "command":
        inject_global_light(world, message["payload"], float(message["rate_hz"]),
                            duration_s=message.get("duration_s"))
    elif kind == "program":
        from . import fsm as fsm_mod
        agent = world.agent(message["agent"])
        program = deserialize(message["bits"])
        agent.program = program
        bits = tuple(int(c) for c in message["bits"])
        agent.fsm = agent.fsm.__class__(shift_register=bits, latched=bits,
                                        sensors=agent.fsm.sensors)
        if program.autorun:
            agent.fsm = fsm_mod.receive_command(agent.fsm,
                                                fsm_mod.START_COMMAND, program)
        world.log("ProgramLatched", agent.id, bits=message["bits"], via="direct")
    else:
        raise ValueError(f"unknown command type {kind!r}")
    if writer is not None:
        writer.command(world, message)


def run_world(world: TankState, ticks: int, writer: TraceWriter | None = None,
              commands=None) -> TankState:
    """Run for a fixed number of ticks, applying scheduled commands at their
    tick boundaries.  commands is a list of (tick, message)."""
    by_tick = {}
    for tick_at, message in commands or []:
        by_tick.setdefault(tick_at, []).append(message)
    for _ in range(ticks):
        for message in by_tick.get(world.tick, []):
            apply_command(world, message, writer)
        step(world)
        if writer is not None:
            writer.on_tick(world)
    return world


def run_scenario_to_file(scenario: Scenario, trace_path: str,
                         seed: int | None = None, threads: int = 1,
                         ticks: int | None = None) -> TankState:
    world = build_world(scenario, seed=seed, threads=threads)
    total = scenario.duration_ticks if ticks is None else ticks
    try:
        sink = open(trace_path, "w")
    except OSError as exc:
        raise TraceIOError(str(exc))
    writer = TraceWriter(sink, scenario.raw, world.seed, scenario.decimation)
    try:
        run_world(world, total, writer)
        writer.close(world.tick)
    finally:
        sink.close()
    return world


def replay_trace(trace_path: str, out_path: str) -> None:
    """Re-run a recorded session headlessly from its own header."""
    records = read_trace(trace_path)
    if not records or records[0].get("type") != "header":
        raise TraceIOError("trace has no header record")
    header = records[0]
    commands = [(r["tick"], r["msg"]) for r in records
                if r.get("type") == "command_applied"]
    ends = [r["tick"] for r in records if r.get("type") == "end"]
    has_end = bool(ends)
    if has_end:
        last_tick = ends[-1]
    else:
        last_tick = max((r["tick"] for r in records if "tick" in r), default=0)
    scenario = Scenario(name=header["scenario"].get("name", "replay"),
                        seed=header["seed"],
                        duration_s=float(header["scenario"].get("duration_s", 0)),
                        decimation=header["decimation"],
                        raw=header["scenario"],
                        schedule=header["scenario"].get("light_schedule", []))
    world = build_world(scenario, seed=header["seed"])
    try:
        sink = open(out_path, "w")
    except OSError as exc:
        raise TraceIOError(str(exc))
    writer = TraceWriter(sink, header["scenario"], header["seed"],
                         header["decimation"])
    try:
        run_world(world, last_tick, writer, commands)
        writer.close(world.tick if has_end else None)
    finally:
        sink.close()
