"""Named RNG sub-streams, all derived from a single root seed.

Every source of randomness in a run (per-epoch tie-breaking, feature jitter,
estimator restarts, Monte-Carlo draws) pulls from its own named stream, so
drawing more from one component never shifts the values seen by another, and
the whole run is reproducible from one integer seed.
"""
from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, *path) -> np.random.Generator:
    """Generator for the sub-stream addressed by ``path`` under ``seed``.

    Path elements may be ints (epoch numbers) or short strings (component
    names); strings are hashed with crc32 so the mapping is stable across
    runs and platforms.
    """
    key = tuple(
        int(p) & 0xFFFFFFFF if isinstance(p, (int, np.integer)) else zlib.crc32(str(p).encode())
        for p in path
    )
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def as_generator(seed) -> np.random.Generator:
    """Accept either an integer seed or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
