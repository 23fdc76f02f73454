"""Deterministic 64-bit PRNG used by every model stream and experiment.

The generator is a splitmix-style counter RNG.  Its state advances by a
fixed odd constant and each output is a bijective mix of the new state:

    state  <- (state + 0x9E3779B97F4A7C15)  mod 2^64
    z      <- state
    z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  mod 2^64
    z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB  mod 2^64
    output <- z ^ (z >> 31)

Because the n-th output depends only on ``seed + n * GAMMA``, block
generation vectorises exactly: ``float_block(n)`` returns the same values
as n scalar ``next_float()`` calls.  Floats take the top 53 bits, so they
are uniform on [0, 1) and independent of platform word size.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FLOAT_SCALE = 2.0**-53


def mix64(z: int) -> int:
    """Finalizing mix; bijective on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Seeded stream of 64-bit integers and [0, 1) floats."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * _FLOAT_SCALE

    def u64_block(self, n: int) -> np.ndarray:
        """Next n outputs as uint64, bit-identical to n scalar calls."""
        ks = np.uint64(self.state) + np.uint64(GAMMA) * np.arange(1, n + 1, dtype=np.uint64)
        self.state = (self.state + n * GAMMA) & MASK64
        z = ks
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def float_block(self, n: int) -> np.ndarray:
        """Next n floats in [0, 1) as float64."""
        return (self.u64_block(n) >> np.uint64(11)).astype(np.float64) * _FLOAT_SCALE


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Seed for trial number ``trial_index`` (0-based) of an experiment."""
    return (base_seed + trial_index) & MASK64
