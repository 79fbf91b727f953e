"""Command-line entry points.

Exit codes: 0 success, 2 malformed scenario (with a location-anchored
diagnostic), 3 trace I/O failure, 4 port busy.
"""

from __future__ import annotations

import json
import sys

import click

from . import fsm as fsm_mod
from .errors import (CodecError, FrameUnderrun, ScenarioError,
                     SmartletSimError, TraceIOError)
from .manchester import (ManchesterParams, manchester_decode,
                         manchester_encode)
from .pulsetrain import PulseTrain
from .scenario import load_scenario
from .solar import dome_sweep, angular_factor, SolarCellSpec, CellKind
from .trace import (read_trace, replay_trace, run_scenario_to_file,
                    trace_hash)
from .ws2812 import ws2812_cascade, ws2812_encode


@click.group()
def main():
    """Simulator of programmable aquatic micro-robot cubes."""


@main.command()
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(), help="Scenario JSON file.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--trace", "trace_path", default=None, help="Trace output (JSONL).")
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--print-hash", is_flag=True, help="Print the trace SHA-256.")
def run(scenario_path, seed, trace_path, threads, print_hash):
    """Run a scenario headlessly to completion."""
    try:
        scenario = load_scenario(scenario_path)
    except ScenarioError as exc:
        click.echo(f"scenario error: {exc}", err=True)
        sys.exit(2)
    out = trace_path or (scenario.name + ".trace.jsonl")
    try:
        run_scenario_to_file(scenario, out, seed=seed, threads=threads)
    except ScenarioError as exc:
        click.echo(f"scenario error: {exc}", err=True)
        sys.exit(2)
    except TraceIOError as exc:
        click.echo(f"trace error: {exc}", err=True)
        sys.exit(3)
    if print_hash:
        click.echo(trace_hash(out))


@main.command()
@click.option("--trace", "trace_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def replay(trace_path, out_path):
    """Replay a recorded trace headlessly; output must match the original."""
    try:
        replay_trace(trace_path, out_path)
    except TraceIOError as exc:
        click.echo(f"trace error: {exc}", err=True)
        sys.exit(3)
    click.echo(trace_hash(out_path))


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--trace", "trace_path", default=None)
def serve(scenario_path, port, trace_path):
    """Serve a live simulation over a WebSocket JSON protocol."""
    from .service import serve_scenario
    try:
        scenario = load_scenario(scenario_path)
    except ScenarioError as exc:
        click.echo(f"scenario error: {exc}", err=True)
        sys.exit(2)
    try:
        serve_scenario(scenario, port, trace_path)
    except OSError as exc:
        click.echo(f"cannot bind port {port}: {exc}", err=True)
        sys.exit(4)


@main.group()
def codec():
    """Waveform codec utilities."""


@codec.group()
def manchester():
    """Self-clocking line code used for optical programming."""


def _write_waveform(train: PulseTrain, out):
    if out:
        with open(out, "w") as fh:
            train.to_csv(fh)
    else:
        click.echo(train.csv_text(), nl=False)


@manchester.command("encode")
@click.option("--bits", required=True, help="Payload bits, e.g. 10100101.")
@click.option("--rate", type=float, default=200.0, show_default=True)
@click.option("--preamble", type=int, default=8, show_default=True)
@click.option("--out", default=None, help="Waveform CSV path (default stdout).")
def manchester_encode_cmd(bits, rate, preamble, out):
    params = ManchesterParams(bit_rate_hz=rate, preamble_bits=preamble)
    train = manchester_encode([int(c) for c in bits], params)
    _write_waveform(train, out)


@manchester.command("decode")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--rate", type=float, default=200.0, show_default=True)
@click.option("--preamble", type=int, default=8, show_default=True)
def manchester_decode_cmd(in_path, rate, preamble):
    with open(in_path) as fh:
        train = PulseTrain.from_csv(fh)
    params = ManchesterParams(bit_rate_hz=rate, preamble_bits=preamble)
    result = manchester_decode(train, params)
    if result.ok:
        click.echo("".join(str(b) for b in result.bits))
    else:
        click.echo(result.status.value, err=True)
        sys.exit(1)


@codec.group()
def ws2812b():
    """Single-wire pixel protocol."""


@ws2812b.command("encode")
@click.option("--grb", "pixels", multiple=True, required=True,
              help="Pixel as GGRRBB hex; repeat for a chain.")
@click.option("--out", default=None)
def ws2812_encode_cmd(pixels, out):
    triples = []
    for text in pixels:
        value = int(text, 16)
        triples.append(((value >> 16) & 0xFF, (value >> 8) & 0xFF, value & 0xFF))
    _write_waveform(ws2812_encode(triples), out)


@ws2812b.command("cascade")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", default=None, help="Forwarded waveform CSV.")
def ws2812_cascade_cmd(in_path, out):
    with open(in_path) as fh:
        train = PulseTrain.from_csv(fh)
    try:
        latched, forwarded = ws2812_cascade(train)
    except (FrameUnderrun, CodecError) as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    click.echo(f"latched {latched:06X}")
    if out:
        with open(out, "w") as fh:
            forwarded.to_csv(fh)


@main.group()
def fsm():
    """On-board state machine utilities."""


@fsm.command("exec")
@click.option("--program", "program_text", required=True,
              help="58-character program word.")
@click.option("--stimulus", "stimulus_path", default=None,
              help="JSONL of {at_tick, event} records "
                   "(start/stop/send/sensor1/sensor2).")
@click.option("--ticks", type=int, default=32, show_default=True)
@click.option("--out", default=None, help="Actuator trace CSV (default stdout).")
def fsm_exec(program_text, stimulus_path, ticks, out):
    """Execute a program and print the per-tick actuator levels."""
    try:
        program = fsm_mod.deserialize(program_text)
    except SmartletSimError as exc:
        click.echo(f"bad program: {exc}", err=True)
        sys.exit(2)
    stimuli = {}
    if stimulus_path:
        with open(stimulus_path) as fh:
            for line in fh:
                if line.strip():
                    record = json.loads(line)
                    stimuli.setdefault(record["at_tick"], []).append(record["event"])
    state = fsm_mod.FsmState()
    for bit in fsm_mod.program_to_bits(program):
        state = fsm_mod.load_bit(state, bit)
    rows = ["tick,a1,a2,a3,mode,data_out"]
    from dataclasses import replace as _replace
    for k in range(ticks):
        for event in stimuli.get(k, []):
            if event == "start":
                state = fsm_mod.receive_command(state, fsm_mod.START_COMMAND, program)
            elif event == "stop":
                state = fsm_mod.receive_command(state, fsm_mod.STOP_COMMAND, program)
            elif event == "send":
                state = fsm_mod.receive_command(state, fsm_mod.SEND_COMMAND, program)
            elif event == "sensor1":
                state = _replace(state, sensors=(True, state.sensors[1]))
            elif event == "sensor2":
                state = _replace(state, sensors=(state.sensors[0], True))
        state = fsm_mod.tick(state, program)
        a = state.actuators
        rows.append(f"{k},{a[0].value},{a[1].value},{a[2].value},"
                    f"{state.mode.value},{state.data_out}")
    text = "\n".join(rows) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.group()
def power():
    """Solar harvesting utilities."""


@power.command("dome")
@click.option("--mode", type=click.Choice(["folded", "prefolded"]),
              required=True)
@click.option("--out", default=None, help="CSV path (default stdout).")
def power_dome(mode, out):
    """Relative harvest over the 16 x 21 LED dome."""
    rows = ["azimuth_deg,altitude_deg,relative_pce"]
    for az, alt, rel in dome_sweep(mode):
        rows.append(f"{az},{alt},{rel:.6f}")
    text = "\n".join(rows) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@power.command("sweep-angle")
@click.option("--kind", type=click.Choice(["planar", "tubular"]), required=True)
@click.option("--out", default=None)
def power_sweep_angle(kind, out):
    """Angular response of a single cell, 0..90 degrees of tilt."""
    import math
    if kind == "planar":
        cell = SolarCellSpec(kind=CellKind.PLANAR, normal=(0, 0, 1),
                             tube_axis=None)
    else:
        cell = SolarCellSpec(kind=CellKind.TUBULAR, tube_axis=(0, 1, 0))
    rows = ["tilt_deg,relative_response"]
    for deg in range(0, 91):
        a = math.radians(deg)
        direction = (math.sin(a), 0.0, math.cos(a))
        rows.append(f"{deg},{angular_factor(cell, direction):.6f}")
    text = "\n".join(rows) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.command("export")
@click.option("--trace", "trace_path", required=True, type=click.Path())
@click.option("--what", type=click.Choice(["depth", "gas"]), default="depth",
              show_default=True)
@click.option("--out", default=None)
def export(trace_path, what, out):
    """Per-agent time series from a trace, for figure reproduction."""
    records = read_trace(trace_path)
    header = records[0]
    dt = float(header["scenario"].get("physics_dt_s", 1e-3))
    rows = ["time_s,agent,value"]
    for record in records:
        if record.get("type") != "state":
            continue
        t = record["tick"] * dt
        for agent in record["agents"]:
            value = agent["pos"][2] if what == "depth" else agent["gas_nl"]
            rows.append(f"{t:.6f},{agent['id']},{value}")
    text = "\n".join(rows) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
