"""Deterministic random primitives for splits and sampling.

Everything that shuffles or samples in this package goes through
splitmix64 + Fisher-Yates so that split files and sampled batches are
bit-reproducible across platforms, Python versions, and reruns. The
generator is spelled out here rather than delegated to ``random.Random``
so the reproducibility contract is self-contained and portable.
"""

from __future__ import annotations

from typing import Iterable, TypeVar

_MASK64 = (1 << 64) - 1

T = TypeVar("T")


class SplitMix64:
    """splitmix64: 64-bit state advanced by a Weyl constant, output mixed."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n), bias-free via rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        span = 1 << 64
        threshold = span - span % n
        while True:
            x = self.next_u64()
            if x < threshold:
                return x % n


def shuffle(items: Iterable[T], seed: int) -> list[T]:
    """Fisher-Yates shuffle of ``items`` driven by splitmix64(seed)."""
    out = list(items)
    rng = SplitMix64(seed)
    for i in range(len(out) - 1, 0, -1):
        j = rng.below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def sample(items: Iterable[T], k: int, seed: int) -> list[T]:
    """Deterministic sample without replacement: shuffle, take the prefix."""
    return shuffle(items, seed)[:k]
