"""Deterministic counter-based pseudo-random generator.

All randomness in this package flows through :class:`CounterRng` so that a
(seed, stream) pair reproduces the same byte-identical outputs on any
platform.  The generator is the splitmix64 finalizer applied to a 64-bit
counter:

    state_0 = finalize(seed ^ finalize(stream))
    out_i   = finalize(state_0 + i * 0x9E3779B97F4A7C15)

finalize(x) is the standard splitmix64 output mix (xor-shift / multiply).
Every operation is exact 64-bit integer arithmetic, so results do not depend
on C library or hardware details.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _finalize(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class CounterRng:
    """Counter-based generator; independent streams via the ``stream`` id."""

    def __init__(self, seed: int, stream: int = 0):
        # offsets keep seed 0 / stream 0 away from the finalizer's zero fixed point
        self._base = _finalize(((seed + _GOLDEN) & _MASK64) ^ _finalize((stream + 1) & _MASK64))
        self._counter = 0
        self._gauss_spare: float | None = None

    def next_u64(self) -> int:
        value = _finalize(self._base + self._counter * _GOLDEN)
        self._counter += 1
        return value

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo bias is negligible for n << 2^64."""
        if n <= 0:
            raise ValueError("randint bound must be positive")
        return self.next_u64() % n

    def gauss(self) -> float:
        """Standard normal via Box-Muller; consumes two uniforms per pair."""
        if self._gauss_spare is not None:
            value = self._gauss_spare
            self._gauss_spare = None
            return value
        u1 = self.uniform()
        u2 = self.uniform()
        # u1 == 0 would take log(0); nudge to the smallest representable draw
        if u1 == 0.0:
            u1 = 2.0 ** -53
        radius = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._gauss_spare = radius * math.sin(theta)
        return radius * math.cos(theta)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]

    def choice_from_cdf(self, probs) -> int:
        """Inverse-CDF draw over class index order (lowest index on ties)."""
        u = self.uniform()
        total = 0.0
        last = 0
        for i, p in enumerate(probs):
            total += p
            last = i
            if u < total:
                return i
        return last
