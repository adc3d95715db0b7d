"""Deterministic 64-bit random generator used everywhere randomness is needed.

The generator is SplitMix64: state advances by the golden-ratio increment
0x9E3779B97F4A7C15 and each output is the finalized mix of the new state.
Every derived draw (uniform, normal, shuffle) is defined exactly in terms of
the raw 64-bit stream, so any implementation of the same algorithm reproduces
datasets, weight initialisations, and batch orders bit-for-bit.  See the
"Reproducibility" section of the README for the full stream contract.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_TWO53 = float(1 << 53)


class SplitMix64:
    """Seeded SplitMix64 stream.

    uniform() consumes one raw draw, normal() consumes exactly two
    (Box-Muller, cosine branch), shuffle() consumes one per swap.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform draw in [lo, hi): (u64 >> 11) * 2^-53 scaled to the range."""
        u = (self.next_u64() >> 11) / _TWO53
        return lo + (hi - lo) * u

    def normal(self, mu: float = 0.0, sd: float = 1.0) -> float:
        """Gaussian draw via Box-Muller; consumes two raw draws.

        u1 is mapped to (0, 1] so the logarithm is always finite.
        """
        import math

        u1 = ((self.next_u64() >> 11) + 1) / _TWO53
        u2 = (self.next_u64() >> 11) / _TWO53
        return mu + sd * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def randint(self, n: int) -> int:
        """Integer in [0, n) as next_u64() mod n."""
        if n <= 0:
            raise ValueError("randint bound must be positive")
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, descending, one randint per position."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]

    def fork(self) -> "SplitMix64":
        """Child stream seeded from the next raw draw of this stream."""
        return SplitMix64(self.next_u64())
