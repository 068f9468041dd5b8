"""Deterministic counter-based PRNG used wherever reproducibility is promised.

SplitMix64 (Steele, Lea & Flood 2014; constants as published by Vigna):
the i-th output is ``mix(seed + (i + 1) * GOLDEN_GAMMA)`` over u64 arithmetic,
so the stream is a pure function of (seed, counter) and is reproducible in any
language. Bounded draws use plain modulo reduction; the slight bias is
irrelevant here because the contract is determinism, not statistical quality.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class DetRng:
    """Counter-based SplitMix64 stream seeded by a 64-bit integer."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN_GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def below(self, bound: int) -> int:
        """Uniform-ish draw in [0, bound) via modulo reduction."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def partial_shuffle(self, n: int, count: int) -> list[int]:
        """First `count` entries of a Fisher-Yates shuffle of range(n).

        Returned in shuffle order (not sorted); callers that need
        order-stability sort afterwards.
        """
        idx = list(range(n))
        for i in range(count):
            j = i + self.below(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:count]

    def permutation(self, n: int) -> list[int]:
        """Full Fisher-Yates permutation of range(n)."""
        return self.partial_shuffle(n, n)

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))
