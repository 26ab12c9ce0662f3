"""Reproducible seed derivation.

Every random draw in the package comes from a ``numpy.random.Philox``
(Philox4x64-10, counter-based) generator keyed by a 64-bit child seed.
Child seeds are derived with the splitmix64 finalizer, so replication ``r``
of an experiment depends only on ``(master_seed, r)`` and never on the order
in which replications are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z = (z + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def child_seed(master: int, index: int) -> int:
    """``splitmix64(master XOR index * golden_gamma)`` in 64-bit arithmetic."""
    return splitmix64((master & MASK64) ^ ((index * GOLDEN_GAMMA) & MASK64))


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    @property
    def key(self) -> int:
        return child_seed(int(self.master_seed), int(self.stream_index))

    def spawn(self, index: int) -> SeedSpec:
        """Seed for sub-stream ``index`` below this one."""
        return SeedSpec(self.key, index)

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key))
