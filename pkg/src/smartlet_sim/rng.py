"""Counter-based per-agent random streams.

Each agent derives an independent stream from (seed, agent id), so inserting
or removing agents never perturbs the randomness seen by the others, and the
same (scenario, seed) pair always replays bit-identically on any platform.
The generator is splitmix64, which is stateless per counter value.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fnv1a(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


class Stream:
    """Deterministic random stream keyed by (seed, name)."""

    def __init__(self, seed: int, name: str):
        self._key = _splitmix64((seed & _MASK64) ^ _fnv1a(name.encode("utf-8")))
        self._counter = 0
        self._spare: float | None = None

    def next_u64(self) -> int:
        self._counter += 1
        return _splitmix64(self._key ^ _splitmix64(self._counter))

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def gauss(self) -> float:
        """Standard normal via Box-Muller (deterministic, no libm state)."""
        if self._spare is not None:
            value, self._spare = self._spare, None
            return value
        while True:
            u = self.uniform()
            if u > 0.0:
                break
        v = self.uniform()
        r = math.sqrt(-2.0 * math.log(u))
        self._spare = r * math.sin(2.0 * math.pi * v)
        return r * math.cos(2.0 * math.pi * v)
