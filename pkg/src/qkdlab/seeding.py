"""Per-round random streams derived from ``(master_seed, round_index)``.

Every round owns an independent stream so results never depend on the order
(or parallelism) in which rounds are evaluated.

Derivation, all arithmetic modulo 2**64::

    mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
               z = (z ^ (z >> 27)) * 0x94D049BB133111EB
               return z ^ (z >> 31)

    round_seed(master, index) = mix64(mix64(master + GAMMA) ^ (index * GAMMA))

with ``GAMMA = 0x9E3779B97F4A7C15``. The stream itself is SplitMix64 started
from that seed.
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_INV_2_53 = 2.0 ** -53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def round_seed(master_seed: int, index: int) -> int:
    if index < 0:
        raise ValueError("round index must be non-negative")
    return mix64(mix64(master_seed + GAMMA) ^ ((index * GAMMA) & MASK64))


class SplitMix64:
    """Minimal SplitMix64 generator exposing ``random()`` and ``next_u64()``."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GAMMA) & MASK64
        return mix64(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def bit(self) -> int:
        return self.next_u64() >> 63


def round_stream(master_seed: int, index: int) -> SplitMix64:
    return SplitMix64(round_seed(master_seed, index))
