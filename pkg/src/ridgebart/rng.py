"""Randomness contract: one seedable, splittable generator per chain.

Chain ``i`` of a fit seeded with ``base_seed`` always draws from the stream
derived from ``(base_seed, i)``, so results are reproducible bit-for-bit for
a fixed seed regardless of how many chains run or in what order they finish.
"""

from __future__ import annotations

import numpy as np

__all__ = ["chain_rng", "spawn_rng"]


def chain_rng(base_seed: int, chain_index: int = 0) -> np.random.Generator:
    """Return the generator for one chain of a fit seeded with `base_seed`."""
    if base_seed < 0:
        raise ValueError("base_seed must be non-negative")
    if chain_index < 0:
        raise ValueError("chain_index must be non-negative")
    return np.random.default_rng(np.random.SeedSequence((base_seed, chain_index)))


def spawn_rng(rng: np.random.Generator, key: int) -> np.random.Generator:
    """Derive an independent child stream, e.g. for a parallel task."""
    seed = rng.integers(0, 2**63 - 1, dtype=np.int64)
    return np.random.default_rng(np.random.SeedSequence((int(seed), key)))
