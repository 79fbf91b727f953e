"""Manchester line code with frequency-selective reception.

Every bit cell carries a mid-cell transition; under the rising-is-one
convention a '1' is low-then-high and a '0' is high-then-low.  A decoder
locks onto the alternating preamble, measures the cell period from the
preamble transition spacing, and refuses the frame entirely when the measured
period is outside its tolerance band - that is what lets receivers tuned to
different bit rates ignore each other's traffic on the same light channel.

Frames on the wire are preamble + 2-bit frame type + payload.  Type 01
carries an 8-bit command word, type 10 a 58-bit program image.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from enum import Enum

from .pulsetrain import PulseTrain

FRAME_COMMAND = (0, 1)
FRAME_PROGRAM = (1, 0)
COMMAND_PAYLOAD_BITS = 8
PROGRAM_PAYLOAD_BITS = 58


class Convention(Enum):
    RISING_IS_ONE = "rising"
    FALLING_IS_ONE = "falling"


@dataclass(frozen=True)
class ManchesterParams:
    bit_rate_hz: float = 200.0
    convention: Convention = Convention.RISING_IS_ONE
    tolerance_fraction: float = 0.25
    preamble_bits: int = 8

    def __post_init__(self):
        if self.bit_rate_hz <= 0:
            raise ValueError("bit rate must be positive")
        if not 0.0 < self.tolerance_fraction < 0.5:
            raise ValueError("tolerance fraction must be in (0, 0.5)")

    @property
    def cell_ns(self) -> int:
        return 2 * round(5e8 / self.bit_rate_hz)


class DecodeStatus(Enum):
    OK = "ok"
    NO_LOCK = "no_lock"
    FRAME_ABORT = "frame_abort"


@dataclass(frozen=True)
class DecodeResult:
    status: DecodeStatus
    bits: tuple = ()

    @property
    def ok(self) -> bool:
        return self.status is DecodeStatus.OK


NO_LOCK = DecodeResult(DecodeStatus.NO_LOCK)
FRAME_ABORT = DecodeResult(DecodeStatus.FRAME_ABORT)


def _half_cells(bit: int, convention: Convention):
    one = (0, 1) if convention is Convention.RISING_IS_ONE else (1, 0)
    return one if bit else (one[1], one[0])


def manchester_encode(bits, params: ManchesterParams) -> PulseTrain:
    """Encode preamble + payload; the train always ends at the low level."""
    payload = [1 if b else 0 for b in bits]
    if not payload and params.preamble_bits == 0:
        raise ValueError("nothing to encode")
    preamble = [(i + 1) % 2 for i in range(params.preamble_bits)]  # 1010...
    half = params.cell_ns // 2
    runs = []
    for bit in preamble + payload:
        first, second = _half_cells(bit, params.convention)
        runs.append((first, half))
        runs.append((second, half))
    train = PulseTrain.from_runs(runs)
    if train.edges and train.edges[-1][1] == 1:
        # Return-to-low edge at the frame end.
        edges = train.edges + ((train.duration_ns, 0),)
        train = PulseTrain(edges, train.duration_ns)
    return train


def _walk_cells(train: PulseTrain, first_mid: int, cell_ns: int,
                tolerance_fraction: float, convention: Convention):
    """Self-clocking cell walk.

    Every bit cell carries a mid-cell transition, so the walker hunts for a
    transition inside a tolerance window around the expected mid and
    re-anchors the clock on it - accumulated drift and asymmetric receiver
    lag never build up.  Returns (bits, aborted): aborted means a cell in the
    middle of the frame had no usable transition.
    """
    marks = train.edges[1:]  # (time, new_level) actual transitions
    window = int(tolerance_fraction * cell_ns)
    bits = []
    expected = first_mid
    i = 0
    while True:
        while i < len(marks) and marks[i][0] < expected - window:
            i += 1
        if i >= len(marks):
            return bits, False  # frame ended
        t, new_level = marks[i]
        if t > expected + window:
            # No mid transition where one belongs, yet the signal continues.
            return bits, True
        rising = new_level == 1
        if convention is Convention.RISING_IS_ONE:
            bits.append(1 if rising else 0)
        else:
            bits.append(0 if rising else 1)
        expected = t + cell_ns
        i += 1


def manchester_decode(train: PulseTrain, params: ManchesterParams) -> DecodeResult:
    """Lock onto the preamble and decode the payload.

    Returns NO_LOCK (zero bits) when the measured cell period is outside the
    tolerance band around 1/bitRate or the preamble does not check out, and
    FRAME_ABORT when the signal goes bad mid-frame (partial bits discarded).
    """
    nominal = params.cell_ns
    tol = params.tolerance_fraction
    if params.preamble_bits > 0:
        transitions = train.transitions()
        if len(transitions) < params.preamble_bits:
            return NO_LOCK
        gaps = [transitions[i + 1] - transitions[i]
                for i in range(params.preamble_bits - 1)]
        if any(abs(g - nominal) > tol * nominal for g in gaps):
            return NO_LOCK
        # Mean, not median: asymmetric receiver rise/fall lag alternates the
        # gap lengths and a median would lock onto the biased side.
        cell = round(statistics.fmean(gaps)) if gaps else nominal
        if abs(cell - nominal) > tol * nominal:
            return NO_LOCK
        first_mid = transitions[0]
    else:
        if not train.edges:
            return NO_LOCK
        cell = nominal
        first_mid = train.edges[0][0] + cell // 2

    cells, aborted = _walk_cells(train, first_mid, cell, tol, params.convention)
    if len(cells) < params.preamble_bits:
        return FRAME_ABORT if aborted else NO_LOCK
    expected = [(i + 1) % 2 for i in range(params.preamble_bits)]
    if cells[:params.preamble_bits] != expected:
        return NO_LOCK
    if aborted:
        return FRAME_ABORT
    return DecodeResult(DecodeStatus.OK, tuple(cells[params.preamble_bits:]))


def encode_frame(kind: str, payload_bits, params: ManchesterParams) -> PulseTrain:
    """kind is 'command' (8 payload bits) or 'program' (58 payload bits)."""
    payload = tuple(1 if b else 0 for b in payload_bits)
    if kind == "command":
        head, want = FRAME_COMMAND, COMMAND_PAYLOAD_BITS
    elif kind == "program":
        head, want = FRAME_PROGRAM, PROGRAM_PAYLOAD_BITS
    else:
        raise ValueError(f"unknown frame kind {kind!r}")
    if len(payload) != want:
        raise ValueError(f"{kind} frame needs {want} bits, got {len(payload)}")
    return manchester_encode(head + payload, params)


def decode_frame(bits):
    """Split decoded payload bits into (kind, payload) or (None, ()) when the
    type field or length is wrong."""
    bits = tuple(bits)
    if len(bits) < 2:
        return None, ()
    head, payload = bits[:2], bits[2:]
    if head == FRAME_COMMAND and len(payload) == COMMAND_PAYLOAD_BITS:
        return "command", payload
    if head == FRAME_PROGRAM and len(payload) == PROGRAM_PAYLOAD_BITS:
        return "program", payload
    return None, ()


class StreamingDecoder:
    """Incremental decoder fed one digital sample at a time.

    Samples arrive at the communication sub-step rate.  A burst starts at the
    first transition out of the idle-low line and ends after a quiet gap of a
    few nominal cells; the buffered burst is then decoded like an offline
    train.  Rate mismatches surface as no-lock results, which is exactly the
    frequency-selective behavior receivers rely on.
    """

    QUIET_CELLS = 2.5

    def __init__(self, params: ManchesterParams):
        self.params = params
        self._level = 0
        self._burst = None      # list of (t_ns, level) edges
        self._last_change = 0

    @property
    def pending(self) -> bool:
        return self._burst is not None

    def push(self, t_ns: int, level: int):
        """Feed one sample; returns a DecodeResult when a burst completes."""
        result = None
        if self._burst is not None:
            quiet = t_ns - self._last_change
            if quiet > self.QUIET_CELLS * self.params.cell_ns:
                result = self._finish(t_ns)
        if level != self._level:
            if self._burst is None and level == 1:
                edges = [(t_ns, 1)]
                if t_ns > 0:
                    # Synthetic initial low edge so the train starts with a
                    # defined level.
                    edges.insert(0, (t_ns - 1, 0))
                self._burst = edges
            elif self._burst is not None:
                self._burst.append((t_ns, level))
            self._level = level
            self._last_change = t_ns
        return result

    def flush(self, t_ns: int):
        if self._burst is not None:
            return self._finish(t_ns)
        return None

    def _finish(self, t_ns: int):
        edges = self._burst
        self._burst = None
        if len(edges) < 4:
            return None  # stray blink, not worth reporting
        # The frame ends half a cell after its final transition; anything
        # later is inter-frame silence.
        duration = edges[-1][0] + self.params.cell_ns // 2
        train = PulseTrain(tuple(edges), duration)
        return manchester_decode(train, self.params)
