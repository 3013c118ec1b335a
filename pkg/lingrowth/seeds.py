"""64-bit seed mixing for reproducible, embarrassingly parallel ensembles.

``derive_seed(master, index)`` is the SplitMix64 finaliser applied to
``master + (index + 1) * GOLDEN``. The finaliser is a bijection of the 64-bit
integers, so distinct run indices below ``2**64`` always yield distinct
seeds. The constants are fixed and must never change: recorded seeds are
only reproducible while they stay the same.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def splitmix64(value: int) -> int:
    """Return the SplitMix64 avalanche of ``value`` (taken modulo ``2**64``)."""

    z = value & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Return the seed of run ``index`` in an ensemble with ``master`` seed."""

    if index < 0:
        raise ValueError(f"run index must be nonnegative, got {index}")
    return splitmix64(master + (index + 1) * GOLDEN)


def derive_seeds(master: int, indices: np.ndarray) -> np.ndarray:
    """Vectorised :func:`derive_seed` over an array of run indices."""

    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(master & MASK64) + (idx + np.uint64(1)) * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def site_seed(master: int, site: Sequence[int]) -> int:
    """Return a per-site stream seed, folding each coordinate through the mixer."""

    z = splitmix64(master)
    for coord in site:
        z = splitmix64(z ^ (coord & MASK64))
    return z


__all__ = [
    "GOLDEN",
    "MIX1",
    "MIX2",
    "splitmix64",
    "derive_seed",
    "derive_seeds",
    "site_seed",
]
