"""Scenario files: JSON descriptions of a tank run.

A scenario pins the tank geometry, water parameters, the agents (pose,
58-bit program text, decoder rate, face barcodes, tether flag), the steady
lighting, a schedule of modulated transmissions, the duration and the seed.
Loading is strict: problems raise ScenarioError with a path-anchored message
so the CLI can point at the offending entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import fsm as fsm_mod
from .aquatics import SmartletBody, WaterParams
from .docking import FacePattern
from .engine import (FACE_NORMALS, SmartletAgent, TankState,
                     inject_global_light)
from .errors import ScenarioError
from .light import LightEnvironment, LightSource, SourceKind, unit
from .link import OpticalLinkParams


@dataclass
class Scenario:
    name: str
    seed: int
    duration_s: float
    decimation: int
    raw: dict
    schedule: list = field(default_factory=list)

    @property
    def duration_ticks(self) -> int:
        return max(0, round(self.duration_s * 1e9 / self.raw_physics_dt_ns))

    @property
    def raw_physics_dt_ns(self) -> int:
        return round(float(self.raw.get("physics_dt_s", 1e-3)) * 1e9)


def _expect(obj, key, kind, where, default=None, required=False):
    if key not in obj:
        if required:
            raise ScenarioError(f"missing required key '{key}'", where)
        return default
    value = obj[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ScenarioError(
            f"'{key}' should be {getattr(kind, '__name__', kind)},"
            f" got {type(value).__name__}", where)
    return value


def _water(spec: dict, where: str) -> WaterParams:
    kwargs = {}
    mapping = {
        "density_kg_m3": "density_kg_m3",
        "dissolution_rate_bulk": "dissolution_rate_bulk",
        "dissolution_rate_surface": "dissolution_rate_surface",
        "drag_n_s_per_m": "drag_n_s_per_m",
        "capillary_length_m": "capillary_length_m",
        "capillary_force_n": "capillary_force_n",
        "surface_bond_force_n": "surface_bond_force_n",
        "interface_detach_force_n": "interface_detach_force_n",
        "brownian_speed_m_s": "brownian_speed_m_s",
    }
    for key, attr in mapping.items():
        if key in spec:
            kwargs[attr] = _expect(spec, key, float, where)
    try:
        return WaterParams(**kwargs)
    except Exception as exc:
        raise ScenarioError(str(exc), where)


def _body(spec: dict, where: str) -> SmartletBody:
    kwargs = {}
    for key in ("edge_length_m", "dry_mass_kg", "solid_volume_m3",
                "gas_volume_m3"):
        if key in spec:
            kwargs[key] = _expect(spec, key, float, where)
    pos = _expect(spec, "position_m", list, where, required=True)
    if len(pos) != 3:
        raise ScenarioError("'position_m' needs three coordinates", where)
    kwargs["position_m"] = tuple(float(v) for v in pos)
    if spec.get("at_surface"):
        kwargs["at_surface"] = True
        kwargs["on_floor"] = False
    try:
        return SmartletBody(**kwargs)
    except Exception as exc:
        raise ScenarioError(str(exc), where)


def _faces(spec: dict, where: str) -> dict:
    faces = {}
    for face, entry in spec.items():
        if face not in FACE_NORMALS:
            raise ScenarioError(f"unknown face '{face}'", where)
        if isinstance(entry, dict):
            text = _expect(entry, "pattern", str, f"{where}.{face}", required=True)
            rects = bool(entry.get("registration_rects", False))
        else:
            text, rects = entry, False
        try:
            faces[face] = FacePattern.parse(text, rects)
        except Exception as exc:
            raise ScenarioError(str(exc), f"{where}.{face}")
    return faces


def _agent(spec: dict, index: int) -> SmartletAgent:
    where = f"agents[{index}]"
    agent_id = _expect(spec, "id", str, where, required=True)
    where = f"agents[{index}] ({agent_id})"
    program = None
    text = _expect(spec, "program", str, where)
    if text:
        try:
            program = fsm_mod.deserialize(text)
        except Exception as exc:
            raise ScenarioError(f"bad program: {exc}", where)
    link_kwargs = {}
    if "link" in spec:
        for key in ("intensity_scale_w_cm2", "bandwidth_hz",
                    "digital_threshold_v"):
            if key in spec["link"]:
                link_kwargs[key] = float(spec["link"][key])
    return SmartletAgent(
        id=agent_id,
        body=_body(spec.get("body", {"position_m": [0.02, 0.02, 0.0005]}), where),
        program=program,
        decoder_rate_hz=_expect(spec, "decoder_rate_hz", float, where, 200.0),
        face_patterns=_faces(spec.get("face_patterns", {}), where),
        tethered=bool(spec.get("tethered", False)),
        green_face=_expect(spec, "green_face", str, where, "px"),
        opd_faces=tuple(spec.get("opd_faces", ("px", "nx"))),
        link=OpticalLinkParams(**link_kwargs),
    )


def load_scenario(path: str) -> Scenario:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(str(exc), path)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}",
                            f"{path}:{exc.lineno}:{exc.colno}")
    if not isinstance(raw, dict):
        raise ScenarioError("scenario root must be an object", path)
    name = _expect(raw, "name", str, path, "scenario")
    seed = _expect(raw, "seed", int, path, 0)
    duration = _expect(raw, "duration_s", float, path, 10.0)
    decimation = _expect(raw, "decimation", int, path, 10)
    if decimation < 1:
        raise ScenarioError("'decimation' must be >= 1", path)
    schedule = raw.get("light_schedule", [])
    if not isinstance(schedule, list):
        raise ScenarioError("'light_schedule' must be a list", path)
    for i, entry in enumerate(schedule):
        w = f"light_schedule[{i}]"
        _expect(entry, "at_s", float, w, required=True)
        _expect(entry, "payload", str, w, required=True)
        _expect(entry, "rate_hz", float, w, required=True)
    return Scenario(name=name, seed=seed, duration_s=duration,
                    decimation=decimation, raw=raw, schedule=schedule)


def build_world(scenario: Scenario, seed: int | None = None,
                threads: int = 1) -> TankState:
    raw = scenario.raw
    where = scenario.name
    tank = raw.get("tank", {})
    size = tank.get("size_m", [0.04, 0.04, 0.004])
    if len(size) != 3:
        raise ScenarioError("'tank.size_m' needs three extents", where)
    water_depth = float(tank.get("water_depth_m", size[2]))

    env = LightEnvironment()
    lighting = raw.get("lighting", {})
    if "sun" in lighting:
        sun = lighting["sun"]
        direction = unit(tuple(sun.get("direction_to_source", (0.0, 0.0, 1.0))))
        env.sources.append(LightSource(direction,
                                       float(sun.get("irradiance_w_cm2", 0.1)),
                                       SourceKind.SUN))

    agents = [_agent(spec, i) for i, spec in enumerate(raw.get("agents", []))]
    physics_dt_ns = scenario.raw_physics_dt_ns
    if "comm_dt_s" in raw:
        comm_dt_ns = round(float(raw["comm_dt_s"]) * 1e9)
    else:
        comm_dt_ns = physics_dt_ns // 10
    world = TankState(
        agents=agents,
        water=_water(raw.get("water", {}), f"{where}.water"),
        env=env,
        physics_dt_ns=physics_dt_ns,
        comm_dt_ns=comm_dt_ns,
        seed=scenario.seed if seed is None else seed,
        bounds_m=((0.0, float(size[0])), (0.0, float(size[1]))),
        floor_z_m=0.0,
        surface_z_m=water_depth,
        threads=threads,
    )
    if "command_irradiance_w_cm2" in raw:
        world.command_irradiance_w_cm2 = float(raw["command_irradiance_w_cm2"])

    for i, entry in enumerate(scenario.schedule):
        at_ns = round(float(entry["at_s"]) * 1e9)
        source = entry.get("source", "global")
        inject_global_light(world, entry["payload"], float(entry["rate_hz"]),
                            source=source, at_ns=at_ns)
    # Scheduled injections are part of the scenario, not run-time events.
    world.event_log.clear()

    for pair in raw.get("bonds", []):
        a, b = world.agent(pair[0]), world.agent(pair[1])
        from .engine import Bond  # local import to avoid a cycle at module load
        score = int(pair[2]) if len(pair) > 2 else 16
        world.bonds.append(Bond(a.id, b.id, ("px", "nx"), score,
                                world.water.surface_bond_force_n * score))
        a.bonded_to, b.bonded_to = b.id, a.id
    return world
