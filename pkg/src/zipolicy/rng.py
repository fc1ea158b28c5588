"""Seeded 64-bit hashing used wherever reproducibility across machines matters."""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 finalisation round of ``x + gamma``."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(*values: int) -> int:
    """Hash a tuple of integers into one 64-bit seed.

    Used to derive per-episode seeds from (map seed, run index, episode index).
    Negative inputs are folded into their two's complement form.
    """
    h = 0
    for v in values:
        h = splitmix64(h ^ (int(v) & MASK64))
    return h


def splitmix64_stream(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of a splitmix64 generator started at ``seed``."""
    counter = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + counter * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def uniform_signed(seed: int, count: int) -> np.ndarray:
    """``count`` doubles in [-1, 1) from the top 53 bits of a splitmix64 stream."""
    bits = splitmix64_stream(seed, count) >> np.uint64(11)
    return bits.astype(np.float64) * (2.0 / 2.0**53) - 1.0
