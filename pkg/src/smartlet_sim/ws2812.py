"""Single-wire NZR pixel protocol with cascade semantics.

Bit values ride on segment durations: a '0' is 0.40 us high then 0.85 us low,
a '1' is 0.80 us high then 0.45 us low, each segment tolerating +/-150 ns.
Pixels consume 24 bits in G, R, B byte order, high bit first.  A chained
pixel latches the first 24 bits it sees and re-emits the remainder with clean
nominal timing (reshaping), so jitter never accumulates down the chain.  A
low period longer than the reset time ends the frame.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CodecError, FrameUnderrun
from .pulsetrain import PulseTrain

BITS_PER_PIXEL = 24


@dataclass(frozen=True)
class Ws2812Timing:
    t0h_ns: int = 400
    t0l_ns: int = 850
    t1h_ns: int = 800
    t1l_ns: int = 450
    reset_ns: int = 50_000
    tolerance_ns: int = 150

    @property
    def bit_ns(self) -> int:
        return self.t0h_ns + self.t0l_ns  # == t1h + t1l == 1.25 us


def pixel_bits(pixels) -> tuple:
    """(G, R, B) byte triples to the 24n-bit wire order, MSB first."""
    bits = []
    for g, r, b in pixels:
        for byte in (g, r, b):
            if not 0 <= byte <= 255:
                raise ValueError(f"channel value out of range: {byte}")
            bits.extend((byte >> (7 - i)) & 1 for i in range(8))
    return tuple(bits)


def encode_bits(bits, timing: Ws2812Timing) -> PulseTrain:
    runs = []
    for bit in bits:
        if bit:
            runs.append((1, timing.t1h_ns))
            runs.append((0, timing.t1l_ns))
        else:
            runs.append((1, timing.t0h_ns))
            runs.append((0, timing.t0l_ns))
    runs.append((0, timing.reset_ns))
    return PulseTrain.from_runs(runs)


def ws2812_encode(pixels, timing: Ws2812Timing = Ws2812Timing()) -> PulseTrain:
    pixels = list(pixels)
    if not pixels:
        raise ValueError("at least one pixel required")
    return encode_bits(pixel_bits(pixels), timing)


def _within(value: int, nominal: int, tol: int) -> bool:
    return abs(value - nominal) <= tol


def ws2812_decode(train: PulseTrain, timing: Ws2812Timing = Ws2812Timing()) -> tuple:
    """Recover the bit sequence of one frame.

    Accepts any segment inside its datasheet tolerance window and raises
    CodecError for anything outside.  The final low segment may absorb the
    reset gap.
    """
    runs = list(train.runs())
    if not runs:
        return ()
    if runs[0][0] == 0:
        runs = runs[1:]  # leading idle-low before the first bit
    bits = []
    i = 0
    tol = timing.tolerance_ns
    while i < len(runs):
        level, high_ns = runs[i]
        if level != 1:
            raise CodecError(f"expected a high segment at run {i}")
        if _within(high_ns, timing.t0h_ns, tol):
            bit, low_nominal = 0, timing.t0l_ns
        elif _within(high_ns, timing.t1h_ns, tol):
            bit, low_nominal = 1, timing.t1l_ns
        else:
            raise CodecError(f"high segment of {high_ns} ns fits no bit window")
        if i + 1 >= len(runs):
            raise CodecError("frame ends on a high segment")
        low_level, low_ns = runs[i + 1]
        if low_level != 0:
            raise CodecError("segments must alternate")
        last = i + 2 >= len(runs)
        if not _within(low_ns, low_nominal, tol):
            # The final low legitimately absorbs the reset gap.
            if not (last and low_ns >= timing.reset_ns):
                raise CodecError(f"low segment of {low_ns} ns fits no bit window")
        bits.append(bit)
        i += 2
    return tuple(bits)


def ws2812_cascade(train: PulseTrain, timing: Ws2812Timing = Ws2812Timing()):
    """One chained pixel: latch the first 24 bits, forward the rest reshaped.

    Returns (latched_word, forwarded_train).  The forwarded train carries
    nominal segment timing regardless of input jitter; with exactly one
    pixel's worth of input it is empty.
    """
    bits = ws2812_decode(train, timing)
    if len(bits) < BITS_PER_PIXEL:
        raise FrameUnderrun(f"only {len(bits)} bits before reset")
    latched = 0
    for b in bits[:BITS_PER_PIXEL]:
        latched = (latched << 1) | b
    rest = bits[BITS_PER_PIXEL:]
    if rest:
        forwarded = encode_bits(rest, timing)
    else:
        forwarded = PulseTrain((), 0)
    return latched, forwarded
