"""Programmable on-board finite state machine.

The chiplet runs a 58-bit program: a 4-bit header followed by three 18-bit
phase blocks. Programs are loaded serially into a shift register, one bit per
clock, and the machine has four operating modes (idle, programming, running,
sending). While running it plays 8-step tristate patterns on three actuator
outputs, with a programmable repeat count per phase and conditional
transitions evaluated at step boundaries.

Bit layout of the serialized program (MSB first, 58 characters of '0'/'1'):

    bit 0      clock select   0 = slow (20 Hz), 1 = fast (400 Hz)
    bit 1      autorun        program starts as soon as it is latched
    bit 2      send on idle   echo the program when a run ends via cond target
    bit 3      reserved, must be 0
    bits 4-21  phase 0:  pattern[8] mask[3] repeats[3] condSel[2] condTarget[2]
    bits 22-39 phase 1   (same field order)
    bits 40-57 phase 2

Within a phase: pattern bit (7 - step) gives the drive level of that step, so
the pattern literal reads left to right as steps 0..7.  Mask bit k enables
actuator A(k+1).  A phase runs repeats+1 cycles of 8 steps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum, IntEnum

from .errors import MalformedProgram, ProtocolViolation

PROGRAM_BITS = 58
NUM_PHASES = 3
NUM_ACTUATORS = 3
STEPS_PER_CYCLE = 8

CLOCK_SLOW_HZ = 20.0
CLOCK_FAST_HZ = 400.0

# 8-bit command words, pairwise Hamming distance >= 4.
START_COMMAND = 0b10100101
STOP_COMMAND = 0b01011010
SEND_COMMAND = 0b11000011

COMMAND_NAMES = {START_COMMAND: "START", STOP_COMMAND: "STOP", SEND_COMMAND: "SEND"}
COMMAND_WORDS = {name: word for word, name in COMMAND_NAMES.items()}


class Mode(Enum):
    IDLE = "Idle"
    PROGRAMMING = "Programming"
    RUNNING = "Running"
    SENDING = "Sending"


class Level(Enum):
    HIGH = "H"
    LOW = "L"
    Z = "Z"


class CondSel(IntEnum):
    ALWAYS_AT_END = 0  # take condTarget when the phase's repeats complete
    SENSOR1 = 1
    SENSOR2 = 2
    TRIGGER = 3


class CondTarget(IntEnum):
    PREVIOUS = 0
    SAME = 1
    NEXT = 2
    IDLE = 3


def _check_width(name: str, value: int, bits: int) -> None:
    if not isinstance(value, int) or not 0 <= value < (1 << bits):
        raise MalformedProgram(f"{name} must fit in {bits} bits, got {value!r}")


@dataclass(frozen=True)
class PhaseBlock:
    pattern: int = 0       # 8 bits, bit (7 - step) drives the step
    mask: int = 0          # 3 bits, bit k enables actuator k
    repeats: int = 0       # 3 bits, cycles run = repeats + 1
    cond_sel: int = 0      # CondSel
    cond_target: int = 0   # CondTarget

    def __post_init__(self):
        _check_width("pattern", self.pattern, 8)
        _check_width("mask", self.mask, 3)
        _check_width("repeats", self.repeats, 3)
        _check_width("condSel", self.cond_sel, 2)
        _check_width("condTarget", self.cond_target, 2)

    @property
    def cycles(self) -> int:
        return self.repeats + 1

    def step_level(self, step: int) -> Level:
        return Level.HIGH if (self.pattern >> (7 - step)) & 1 else Level.LOW


@dataclass(frozen=True)
class LabletProgram:
    clock_select: int = 0
    autorun: bool = False
    send_on_idle: bool = False
    phases: tuple = (PhaseBlock(), PhaseBlock(), PhaseBlock())

    def __post_init__(self):
        _check_width("clockSelect", self.clock_select, 1)
        if len(self.phases) != NUM_PHASES:
            raise MalformedProgram(f"expected {NUM_PHASES} phases, got {len(self.phases)}")

    @property
    def clock_hz(self) -> float:
        return CLOCK_FAST_HZ if self.clock_select else CLOCK_SLOW_HZ


def program_to_bits(program: LabletProgram) -> tuple:
    """Serialize to a 58-tuple of ints, header bit 0 first."""
    bits = [program.clock_select, int(program.autorun), int(program.send_on_idle), 0]
    for ph in program.phases:
        for value, width in ((ph.pattern, 8), (ph.mask, 3), (ph.repeats, 3),
                             (ph.cond_sel, 2), (ph.cond_target, 2)):
            bits.extend((value >> (width - 1 - i)) & 1 for i in range(width))
    return tuple(bits)


def serialize(program: LabletProgram) -> str:
    """58-character '0'/'1' string, MSB (header bit 0) first."""
    return "".join(str(b) for b in program_to_bits(program))


def deserialize(word) -> LabletProgram:
    """Parse a 58-bit word given as a string of '0'/'1' or a bit sequence."""
    if isinstance(word, str):
        if any(c not in "01" for c in word):
            raise MalformedProgram("program text may contain only '0' and '1'")
        bits = [int(c) for c in word]
    else:
        bits = [int(b) for b in word]
        if any(b not in (0, 1) for b in bits):
            raise MalformedProgram("program bits must be 0 or 1")
    if len(bits) != PROGRAM_BITS:
        raise MalformedProgram(f"expected {PROGRAM_BITS} bits, got {len(bits)}")
    if bits[3] != 0:
        raise MalformedProgram("reserved header bit must be 0")

    def take(pos: int, width: int) -> int:
        value = 0
        for i in range(width):
            value = (value << 1) | bits[pos + i]
        return value

    phases = []
    pos = 4
    for _ in range(NUM_PHASES):
        phases.append(PhaseBlock(
            pattern=take(pos, 8),
            mask=take(pos + 8, 3),
            repeats=take(pos + 11, 3),
            cond_sel=take(pos + 14, 2),
            cond_target=take(pos + 16, 2),
        ))
        pos += 18
    return LabletProgram(
        clock_select=bits[0],
        autorun=bool(bits[1]),
        send_on_idle=bool(bits[2]),
        phases=tuple(phases),
    )


ALL_Z = (Level.Z, Level.Z, Level.Z)


@dataclass(frozen=True)
class FsmState:
    mode: Mode = Mode.IDLE
    phase_index: int = 0
    step_index: int = 0
    cycles_done: int = 0
    shift_register: tuple = ()   # oldest bit first, at most 58 entries
    fill: int = 0                # bits loaded since the last latch
    actuators: tuple = ALL_Z
    sensors: tuple = (False, False)
    pending_trigger: bool = False
    data_out: int = 0
    latched: tuple | None = None  # most recent complete 58-bit image
    send_remaining: int = 0


def _actuator_levels(phase: PhaseBlock, step: int) -> tuple:
    level = phase.step_level(step)
    return tuple(level if (phase.mask >> i) & 1 else Level.Z
                 for i in range(NUM_ACTUATORS))


def load_bit(state: FsmState, bit) -> FsmState:
    """Shift one program bit in. After the 58th bit the image is latched and
    the machine returns to idle; bits pushed past a full register fall out on
    the data output line."""
    if state.mode not in (Mode.IDLE, Mode.PROGRAMMING):
        raise ProtocolViolation(f"load_bit in mode {state.mode.value}")
    reg = state.shift_register + (1 if bit else 0,)
    data_out = state.data_out
    if len(reg) > PROGRAM_BITS:
        data_out = reg[0]
        reg = reg[1:]
    fill = state.fill + 1
    if fill < PROGRAM_BITS:
        return replace(state, mode=Mode.PROGRAMMING, shift_register=reg,
                       fill=fill, data_out=data_out, actuators=ALL_Z)
    # 58th bit: latch and return to idle (or start immediately on autorun).
    latched = tuple(reg)
    new = replace(state, mode=Mode.IDLE, shift_register=reg, fill=0,
                  data_out=data_out, latched=latched, actuators=ALL_Z)
    try:
        program = deserialize(latched)
    except MalformedProgram:
        return new
    if program.autorun:
        new = replace(new, mode=Mode.RUNNING, phase_index=0, step_index=0,
                      cycles_done=0,
                      actuators=_actuator_levels(program.phases[0], 0))
    return new


def receive_command(state: FsmState, command: int,
                    program: LabletProgram | None = None) -> FsmState:
    """Apply an 8-bit command word.

    Commands act only in idle or running; in programming or sending they are
    ignored (the engine logs that).  Unrecognized words never change state.
    While a running phase waits on a trigger condition, any recognized
    command also raises the pending trigger flag.
    """
    if state.mode not in (Mode.IDLE, Mode.RUNNING):
        return state
    if command not in COMMAND_NAMES:
        return state
    if state.mode is Mode.RUNNING and program is not None:
        phase = program.phases[state.phase_index]
        if phase.cond_sel == CondSel.TRIGGER:
            state = replace(state, pending_trigger=True)
    if command == START_COMMAND and state.mode is Mode.IDLE:
        if program is None or state.latched is None:
            return state  # nothing to run; engine logs the ignore
        return replace(state, mode=Mode.RUNNING, phase_index=0, step_index=0,
                       cycles_done=0,
                       actuators=_actuator_levels(program.phases[0], 0))
    if command == STOP_COMMAND and state.mode is Mode.RUNNING:
        return replace(state, mode=Mode.IDLE, actuators=ALL_Z,
                       pending_trigger=False, data_out=0)
    if command == SEND_COMMAND and state.mode is Mode.IDLE:
        if state.latched is None:
            return state
        return replace(state, mode=Mode.SENDING, send_remaining=PROGRAM_BITS,
                       actuators=ALL_Z)
    return state


def _enter_idle(state: FsmState, program: LabletProgram) -> FsmState:
    """Program-directed end of run: honor the send-on-idle header bit."""
    if program.send_on_idle and state.latched is not None:
        return replace(state, mode=Mode.SENDING, send_remaining=PROGRAM_BITS,
                       actuators=ALL_Z, pending_trigger=False)
    return replace(state, mode=Mode.IDLE, actuators=ALL_Z,
                   pending_trigger=False, data_out=0)


def _resolve_phase(current: int, target: int) -> int:
    if target == CondTarget.PREVIOUS:
        return (current - 1) % NUM_PHASES
    if target == CondTarget.NEXT:
        return (current + 1) % NUM_PHASES
    return current


def _condition_met(state: FsmState, phase: PhaseBlock) -> bool:
    if phase.cond_sel == CondSel.SENSOR1:
        return state.sensors[0]
    if phase.cond_sel == CondSel.SENSOR2:
        return state.sensors[1]
    if phase.cond_sel == CondSel.TRIGGER:
        return state.pending_trigger
    return False

def tick(state: FsmState, program: LabletProgram | None) -> FsmState:
    """Advance one FSM clock period.

    Running: drives exactly one pattern step per tick.  Transitions are
    evaluated at the step boundary, before driving: a met phase condition
    jumps to its target immediately, and once a phase's repeats have all run
    (cyclesDone resting at repeats+1) control moves on - to the condTarget
    for an always-at-end phase, cyclically to the next phase otherwise.  The
    target phase's step 0 is driven in the same tick, so every step holds
    for exactly one clock period.  Sending: shifts one program bit to the
    data output per tick; the register circulates, preserving the image.
    Idle and programming ticks are no-ops.
    """
    if state.mode is Mode.SENDING:
        if state.send_remaining == 0 or not state.shift_register:
            return replace(state, mode=Mode.IDLE, send_remaining=0, data_out=0)
        reg = state.shift_register
        bit, reg = reg[0], reg[1:] + (reg[0],)
        remaining = state.send_remaining - 1
        new = replace(state, shift_register=reg, data_out=bit,
                      send_remaining=remaining, actuators=ALL_Z)
        if remaining == 0:
            new = replace(new, mode=Mode.IDLE)
        return new

    if state.mode is not Mode.RUNNING or program is None:
        if state.mode is Mode.IDLE and (state.data_out or state.actuators != ALL_Z):
            return replace(state, data_out=0, actuators=ALL_Z)
        return state

    phase = program.phases[state.phase_index]
    if phase.cond_sel != CondSel.ALWAYS_AT_END and _condition_met(state, phase):
        if phase.cond_sel == CondSel.TRIGGER:
            state = replace(state, pending_trigger=False)
        if phase.cond_target == CondTarget.IDLE:
            return _enter_idle(state, program)
        state = replace(state,
                        phase_index=_resolve_phase(state.phase_index,
                                                   phase.cond_target),
                        step_index=0, cycles_done=0)
        phase = program.phases[state.phase_index]
    elif state.cycles_done >= phase.cycles:
        target = phase.cond_target if phase.cond_sel == CondSel.ALWAYS_AT_END \
            else CondTarget.NEXT
        if target == CondTarget.IDLE:
            return _enter_idle(state, program)
        state = replace(state,
                        phase_index=_resolve_phase(state.phase_index, target),
                        step_index=0, cycles_done=0)
        phase = program.phases[state.phase_index]

    # Drive the current step, then advance the bookkeeping.
    state = replace(state, actuators=_actuator_levels(phase, state.step_index))
    step = state.step_index + 1
    if step < STEPS_PER_CYCLE:
        return replace(state, step_index=step)
    return replace(state, step_index=0, cycles_done=state.cycles_done + 1)
