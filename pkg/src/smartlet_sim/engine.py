"""The tank world: agents, two-rate stepping, wiring, events.

Each physics tick (default 1 ms) evaluates harvested power, runs the
communication sub-loop (default 0.1 ms) that samples every photodetector and
feeds the per-agent line decoders, advances each agent's FSM at its own clock,
wires actuator outputs to the bubble electrodes and LEDs, then integrates the
aquatic motion and docking.  Everything is deterministic: agents are visited
in ID order, randomness comes from per-agent counter streams, and commands
land only at tick boundaries.

Wiring: the green LED mirrors the FSM data output, the red LED mirrors
actuator A1, and the bubble electrodes follow actuator A3.  Tethered agents
are pinned in place and externally powered; their LED can also be driven by
the scenario's transmission schedule, the way a bench supply drives a probe.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from . import fsm as fsm_mod
from .aquatics import (BgeState, SmartletBody, WaterParams, buoyancy_force,
                       capillary_force, step_motion)
from .docking import FacePattern, Offset, dock_score
from .errors import ConfigError, MalformedProgram
from .fsm import FsmState, LabletProgram, Level, Mode
from .light import LightEnvironment
from .link import OpticalLinkParams, link_irradiance, lowpass_alpha, opd_voltage
from .manchester import (COMMAND_PAYLOAD_BITS, PROGRAM_PAYLOAD_BITS,
                         DecodeStatus, ManchesterParams, StreamingDecoder,
                         decode_frame, encode_frame)
from .pulsetrain import PulseTrain
from .rng import Stream
from .solar import SeriesString, cube_edge_string, string_power

RESTING_DRAW_W = 2e-9            # FSM keep-alive budget
ELECTROLYSIS_MIN_V = 1.8         # water splitting + overpotential floor
BGE_OPERATING_V = 2.1
BGE_MAX_CURRENT_A = 7e-6
MIN_DOCK_SCORE = 6
CAPTURE_GAP_FRACTION = 0.2
DEFAULT_COMMAND_IRRADIANCE_W_CM2 = 5e-3

FACE_NORMALS = {
    "px": (1.0, 0.0, 0.0), "nx": (-1.0, 0.0, 0.0),
    "py": (0.0, 1.0, 0.0), "ny": (0.0, -1.0, 0.0),
    "pz": (0.0, 0.0, 1.0), "nz": (0.0, 0.0, -1.0),
}


@dataclass
class Transmission:
    source: str              # "global" or an agent id
    train: PulseTrain
    start_ns: int
    rate_hz: float
    kind: str = "command"
    payload: str = ""

    @property
    def end_ns(self) -> int:
        return self.start_ns + self.train.duration_ns

    def level_at(self, t_ns: int) -> int:
        if t_ns < self.start_ns or t_ns > self.end_ns:
            return 0
        return self.train.level_at(t_ns - self.start_ns)


@dataclass
class SmartletAgent:
    id: str
    body: SmartletBody = field(default_factory=SmartletBody)
    fsm: FsmState = field(default_factory=FsmState)
    program: LabletProgram | None = None
    decoder_rate_hz: float = 200.0
    string: SeriesString = field(default_factory=cube_edge_string)
    link: OpticalLinkParams = field(default_factory=OpticalLinkParams)
    face_patterns: dict = field(default_factory=dict)
    tethered: bool = False
    green_face: str = "px"
    opd_faces: tuple = ("px", "nx")
    led_green: bool = False
    led_red: bool = False
    bge: BgeState = field(default_factory=BgeState)
    # runtime state
    decoder: StreamingDecoder | None = None
    opd_v: float = 0.0
    fsm_next_ns: int = 0
    harvest_w: float = 0.0
    string_v: float = 0.0
    powered: bool = False
    rng: Stream | None = None
    bonded_to: str | None = None
    sensor_light: bool = False

    def face_center(self, face: str):
        n = FACE_NORMALS[face]
        h = self.body.edge_length_m / 2
        p = self.body.position_m
        return (p[0] + n[0] * h, p[1] + n[1] * h, p[2] + n[2] * h)

    def clock_period_ns(self) -> int:
        hz = self.program.clock_hz if self.program else fsm_mod.CLOCK_SLOW_HZ
        return round(1e9 / hz)


@dataclass
class Bond:
    a: str
    b: str
    faces: tuple
    score: int
    strength_n: float


@dataclass
class TankState:
    agents: list
    water: WaterParams = field(default_factory=WaterParams)
    env: LightEnvironment = field(default_factory=LightEnvironment)
    tick: int = 0
    physics_dt_ns: int = 1_000_000
    comm_dt_ns: int = 100_000
    seed: int = 0
    event_log: list = field(default_factory=list)
    transmissions: list = field(default_factory=list)
    bonds: list = field(default_factory=list)
    bounds_m: tuple = (((0.0, 0.04), (0.0, 0.04)))
    floor_z_m: float = 0.0
    surface_z_m: float = 0.004
    command_irradiance_w_cm2: float = DEFAULT_COMMAND_IRRADIANCE_W_CM2
    threads: int = 1
    _pool: object = None

    def __post_init__(self):
        if self.comm_dt_ns <= 0 or self.physics_dt_ns <= 0:
            raise ConfigError("time steps must be positive")
        if self.physics_dt_ns % self.comm_dt_ns != 0:
            raise ConfigError("comm dt must divide physics dt")
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ConfigError("agent ids must be unique")
        self.agents.sort(key=lambda a: a.id)
        for agent in self.agents:
            if agent.decoder is None:
                agent.decoder = StreamingDecoder(
                    ManchesterParams(bit_rate_hz=agent.decoder_rate_hz))
            if agent.rng is None:
                agent.rng = Stream(self.seed, agent.id)
            if agent.program is not None and agent.fsm.latched is None:
                agent.fsm = replace(agent.fsm,
                                    shift_register=fsm_mod.program_to_bits(agent.program),
                                    latched=fsm_mod.program_to_bits(agent.program))
            if agent.program is not None and agent.program.autorun \
                    and agent.fsm.mode is Mode.IDLE:
                agent.fsm = fsm_mod.receive_command(
                    agent.fsm, fsm_mod.START_COMMAND, agent.program)
        self.refresh_power()

    @property
    def time_ns(self) -> int:
        return self.tick * self.physics_dt_ns

    def agent(self, agent_id: str) -> SmartletAgent:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    def log(self, kind: str, agent: str | None = None, **extra) -> None:
        record = {"tick": self.tick, "kind": kind}
        if agent is not None:
            record["agent"] = agent
        record.update(extra)
        self.event_log.append(record)

    def refresh_power(self) -> None:
        """Steady harvested power; the command source is negligible for power."""
        for agent in self.agents:
            power, v_out, _ = string_power(agent.string, self.env)
            agent.harvest_w = power
            agent.string_v = v_out
            agent.powered = agent.tethered or power >= RESTING_DRAW_W
            up = sum(src.irradiance_w_cm2 * max(0.0, src.direction[2])
                     for src in self.env.sources)
            agent.sensor_light = opd_voltage(agent.link, up) \
                >= agent.link.digital_threshold_v


def _march_fsm(world: TankState, agent: SmartletAgent, upto_ns: int) -> None:
    """Run every FSM clock edge due strictly before upto_ns."""
    period = agent.clock_period_ns()
    if not agent.powered:
        while agent.fsm_next_ns < upto_ns:
            agent.fsm_next_ns += period
        return
    while agent.fsm_next_ns < upto_ns:
        before = agent.fsm.mode
        agent.fsm = fsm_mod.tick(agent.fsm, agent.program)
        agent.fsm_next_ns += period
        if agent.fsm.mode is not before:
            world.log("ModeChange", agent.id, mode=agent.fsm.mode.value)
        _apply_wiring(agent)


def _apply_wiring(agent: SmartletAgent) -> None:
    if not agent.powered:
        agent.led_green = False
        agent.led_red = False
        agent.bge = replace(agent.bge, enabled=False)
        return
    agent.led_green = agent.fsm.data_out == 1
    agent.led_red = agent.fsm.actuators[0] is Level.HIGH
    agent.bge = replace(agent.bge, enabled=agent.fsm.actuators[2] is Level.HIGH)


def _command_word(bits) -> int:
    word = 0
    for b in bits:
        word = (word << 1) | b
    return word


def _dispatch_frame(world: TankState, agent: SmartletAgent, result) -> None:
    if result is None:
        return
    if result.status is DecodeStatus.NO_LOCK:
        world.log("NoLock", agent.id)
        return
    if result.status is DecodeStatus.FRAME_ABORT:
        world.log("FrameAbort", agent.id)
        return
    kind, payload = decode_frame(result.bits)
    if kind is None:
        world.log("FrameInvalid", agent.id, bits=len(result.bits))
        return
    if kind == "command":
        word = _command_word(payload)
        name = fsm_mod.COMMAND_NAMES.get(word, f"0x{word:02X}")
        if agent.fsm.mode in (Mode.PROGRAMMING, Mode.SENDING):
            world.log("CommandIgnored", agent.id, command=name,
                      mode=agent.fsm.mode.value)
            return
        before = agent.fsm.mode
        agent.fsm = fsm_mod.receive_command(agent.fsm, word, agent.program)
        world.log("CommandDecoded", agent.id, command=name)
        if agent.fsm.mode is not before:
            world.log("ModeChange", agent.id, mode=agent.fsm.mode.value)
        _apply_wiring(agent)
        return
    # program frame
    if agent.fsm.mode not in (Mode.IDLE, Mode.PROGRAMMING):
        world.log("ProtocolViolation", agent.id,
                  detail="program while busy", mode=agent.fsm.mode.value)
        return
    before = agent.fsm.mode
    for bit in payload:
        agent.fsm = fsm_mod.load_bit(agent.fsm, bit)
    if agent.fsm.latched is not None:
        try:
            agent.program = fsm_mod.deserialize(agent.fsm.latched)
            agent.fsm_next_ns = world.time_ns  # clock may have changed
            world.log("ProgramLatched", agent.id,
                      bits="".join(str(b) for b in agent.fsm.latched))
        except MalformedProgram as exc:
            world.log("MalformedProgram", agent.id, detail=str(exc))
    if agent.fsm.mode is not before:
        world.log("ModeChange", agent.id, mode=agent.fsm.mode.value)
    _apply_wiring(agent)


def _comm_needed(world: TankState, t0: int, t1: int) -> bool:
    for tx in world.transmissions:
        if tx.start_ns < t1 and tx.end_ns >= t0 - 4 * world.physics_dt_ns:
            return True
    return any(a.decoder.pending for a in world.agents)


def _modulated_irradiance(world: TankState, agent: SmartletAgent, t_ns: int,
                          emitters) -> float:
    """Modulated light on the data input: the top command source reaches every
    agent; peer LEDs go through the face-to-face channel.  Steady sunlight is
    a DC bias the receiver rejects."""
    e = 0.0
    for tx in world.transmissions:
        if tx.source == "global" and tx.level_at(t_ns):
            e += world.command_irradiance_w_cm2
    for other_id, pos, normal, lit in emitters:
        if other_id == agent.id or not lit:
            continue
        best = 0.0
        for face in agent.opd_faces:
            got = link_irradiance(agent.link, pos, normal,
                                  agent.face_center(face), FACE_NORMALS[face])
            if got > best:
                best = got
        e += best
    return e


def _emitter_snapshot(world: TankState, t_ns: int):
    emitters = []
    for agent in world.agents:
        lit = agent.powered and agent.fsm.data_out == 1
        for tx in world.transmissions:
            if tx.source == agent.id and tx.level_at(t_ns):
                lit = True
        agent.led_green = lit
        emitters.append((agent.id, agent.face_center(agent.green_face),
                         FACE_NORMALS[agent.green_face], lit))
    return emitters


def _comm_substeps(world: TankState, t0: int, t1: int) -> None:
    alphas = {a.id: lowpass_alpha(a.link, world.comm_dt_ns * 1e-9)
              for a in world.agents}
    t = t0
    while t < t1:
        emitters = _emitter_snapshot(world, t)
        for agent in world.agents:
            e = _modulated_irradiance(world, agent, t, emitters)
            target = opd_voltage(agent.link, e)
            agent.opd_v += alphas[agent.id] * (target - agent.opd_v)
            digital = 1 if agent.opd_v >= agent.link.digital_threshold_v else 0
            if agent.powered:
                result = agent.decoder.push(t, digital)
                _dispatch_frame(world, agent, result)
        for agent in world.agents:
            _march_fsm(world, agent, t + world.comm_dt_ns)
        t += world.comm_dt_ns


def _update_bge(world: TankState, agent: SmartletAgent) -> None:
    was_on = agent.bge.current_a > 0
    current = 0.0
    if agent.bge.enabled and agent.powered:
        if agent.tethered:
            current = BGE_MAX_CURRENT_A
        elif agent.string_v >= ELECTROLYSIS_MIN_V:
            current = min(agent.harvest_w / BGE_OPERATING_V, BGE_MAX_CURRENT_A)
    agent.bge = replace(agent.bge, current_a=current)
    if current > 0 and not was_on:
        world.log("BgeOn", agent.id)
    elif current == 0 and was_on:
        world.log("BgeOff", agent.id)


def _facing(agent_a: SmartletAgent, agent_b: SmartletAgent):
    dx = agent_b.body.position_m[0] - agent_a.body.position_m[0]
    dy = agent_b.body.position_m[1] - agent_a.body.position_m[1]
    if abs(dx) >= abs(dy):
        return ("px", "nx", abs(dy)) if dx >= 0 else ("nx", "px", abs(dy))
    return ("py", "ny", abs(dx)) if dy >= 0 else ("ny", "py", abs(dx))


def _default_face() -> FacePattern:
    return FacePattern.parse("..../..../..../....")


def _try_dock(world: TankState, a: SmartletAgent, b: SmartletAgent) -> None:
    pa, pb = a.body.position_m, b.body.position_m
    gap = (((pb[0] - pa[0]) ** 2 + (pb[1] - pa[1]) ** 2) ** 0.5
           - a.body.edge_length_m)
    if gap > CAPTURE_GAP_FRACTION * a.body.edge_length_m:
        return
    face_a, face_b, perp = _facing(a, b)
    pat_a = a.face_patterns.get(face_a, _default_face())
    pat_b = b.face_patterns.get(face_b, _default_face())
    frac = perp / a.body.edge_length_m
    offset = Offset.FULL
    if 0.25 <= frac <= 0.8:
        if not (pat_a.registration_rects and pat_b.registration_rects):
            return
        offset = Offset.HALF_Y if face_a in ("px", "nx") else Offset.HALF_X
    score = dock_score(pat_a, pat_b, offset)
    if score < MIN_DOCK_SCORE:
        return
    strength = world.water.surface_bond_force_n * score
    world.bonds.append(Bond(a.id, b.id, (face_a, face_b), score, strength))
    a.bonded_to, b.bonded_to = b.id, a.id
    world.log("Docked", None, agents=[a.id, b.id], faces=[face_a, face_b],
              score=score)


def _aquatics_step(world: TankState) -> None:
    dt = world.physics_dt_ns * 1e-9
    agents = [a for a in world.agents if not a.tethered]
    at_surface = [a for a in agents if a.body.at_surface]

    lateral = {a.id: [0.0, 0.0] for a in agents}
    for i, a in enumerate(at_surface):
        for b in at_surface[i + 1:]:
            dx = b.body.position_m[0] - a.body.position_m[0]
            dy = b.body.position_m[1] - a.body.position_m[1]
            dist = (dx * dx + dy * dy) ** 0.5
            if dist <= 0:
                continue
            f = capillary_force(dist, world.water, a.body.edge_length_m)
            fx, fy = f * dx / dist, f * dy / dist
            if a.bonded_to is None:
                lateral[a.id][0] += fx
                lateral[a.id][1] += fy
            if b.bonded_to is None:
                lateral[b.id][0] -= fx
                lateral[b.id][1] -= fy

    # Bond force-balance checks before motion.
    for bond in list(world.bonds):
        aa, bb = world.agent(bond.a), world.agent(bond.b)
        deficit = max(max(0.0, -buoyancy_force(aa.body, world.water)),
                      max(0.0, -buoyancy_force(bb.body, world.water)))
        if deficit > bond.strength_n:
            world.bonds.remove(bond)
            aa.bonded_to = bb.bonded_to = None
            world.log("Undocked", None, agents=[bond.a, bond.b],
                      faces=list(bond.faces), score=bond.score)

    def plan(agent):
        f_buoy = buoyancy_force(agent.body, world.water)
        held = False
        if agent.bonded_to is not None:
            held = True
        elif agent.body.at_surface and f_buoy < 0:
            held = -f_buoy <= world.water.interface_detach_force_n
        fx, fy = lateral[agent.id]
        return agent, (fx, fy, f_buoy), held

    if world.threads > 1:
        if world._pool is None:
            world._pool = ThreadPoolExecutor(max_workers=world.threads)
        plans = list(world._pool.map(plan, agents))
    else:
        plans = [plan(a) for a in agents]

    for agent, force, held in plans:
        body = agent.body
        new = step_motion(body, force, dt, world.water,
                          bge_current_a=agent.bge.current_a, rng=agent.rng,
                          floor_z_m=world.floor_z_m,
                          surface_z_m=world.surface_z_m,
                          bounds_m=world.bounds_m, held_at_surface=held)
        if not body.on_floor and new.on_floor:
            world.log("FloorReached", agent.id)
        if body.on_floor and not new.on_floor:
            world.log("Levitate", agent.id)
        if not body.at_surface and new.at_surface:
            world.log("SurfaceReached", agent.id)
        if body.at_surface and not new.at_surface:
            world.log("SinkStart", agent.id)
        agent.body = new

    fresh = [a for a in agents if a.body.at_surface and a.bonded_to is None]
    # Cubes are rigid: resolve interpenetration before docking checks.
    for i, a in enumerate(fresh):
        for b in fresh[i + 1:]:
            pa, pb = a.body.position_m, b.body.position_m
            dx, dy = pb[0] - pa[0], pb[1] - pa[1]
            dist = (dx * dx + dy * dy) ** 0.5
            edge = a.body.edge_length_m
            if 0 < dist < edge:
                push = (edge - dist) / 2
                ux, uy = dx / dist, dy / dist
                a.body = replace(a.body, position_m=(pa[0] - ux * push,
                                                     pa[1] - uy * push, pa[2]))
                b.body = replace(b.body, position_m=(pb[0] + ux * push,
                                                     pb[1] + uy * push, pb[2]))
    for i, a in enumerate(fresh):
        for b in fresh[i + 1:]:
            if a.bonded_to is None and b.bonded_to is None:
                _try_dock(world, a, b)


def _update_sensors(world: TankState) -> None:
    """Sensor 1 reads the steady overhead light, sensor 2 the data channel."""
    for agent in world.agents:
        s2 = agent.opd_v >= agent.link.digital_threshold_v
        sensors = (agent.sensor_light, s2)
        if agent.fsm.sensors != sensors:
            agent.fsm = replace(agent.fsm, sensors=sensors)


def step(world: TankState) -> TankState:
    """Advance the world by one physics tick."""
    t0 = world.time_ns
    t1 = t0 + world.physics_dt_ns
    _update_sensors(world)
    if _comm_needed(world, t0, t1):
        _comm_substeps(world, t0, t1)
    else:
        for agent in world.agents:
            _march_fsm(world, agent, t1)
    for agent in world.agents:
        _update_bge(world, agent)
    _aquatics_step(world)
    world.tick += 1
    return world


def _payload_train(payload: str, rate_hz: float) -> tuple:
    params = ManchesterParams(bit_rate_hz=rate_hz)
    if payload in fsm_mod.COMMAND_WORDS:
        word = fsm_mod.COMMAND_WORDS[payload]
        bits = tuple((word >> (7 - i)) & 1 for i in range(8))
        return encode_frame("command", bits, params), "command"
    if all(c in "01" for c in payload) and payload:
        bits = tuple(int(c) for c in payload)
        if len(bits) == COMMAND_PAYLOAD_BITS:
            return encode_frame("command", bits, params), "command"
        if len(bits) == PROGRAM_PAYLOAD_BITS:
            return encode_frame("program", bits, params), "program"
        raise ConfigError(f"payload must be 8 or 58 bits, got {len(bits)}")
    raise ConfigError(f"unknown payload {payload!r}")


def inject_global_light(world: TankState, payload: str, rate_hz: float,
                        duration_s: float | None = None,
                        source: str = "global", at_ns: int | None = None) -> TankState:
    """Schedule a modulated transmission from the top source or a peer LED."""
    if not 1.0 <= rate_hz <= 1000.0:
        raise ConfigError(f"rate must be within [1, 1000] Hz, got {rate_hz}")
    if duration_s is not None and duration_s <= 0:
        return world
    train, kind = _payload_train(payload, rate_hz)
    start = world.time_ns if at_ns is None else at_ns
    world.transmissions.append(Transmission(source, train, start, rate_hz,
                                            kind, payload))
    world.transmissions.sort(key=lambda tx: (tx.start_ns, tx.source))
    world.log("Transmission", None, source=source, payload=payload,
              rate_hz=rate_hz)
    return world
