"""Seeded, splittable random streams.

Each Monte-Carlo unit of work (a trial, a block batch, ...) gets its own
counter-based Philox stream keyed by ``(master_seed, *indices)``, so results
never depend on execution order or on how many workers are used.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "as_generator"]

_SEED_MASK = (1 << 64) - 1


def stream(master_seed: int, *indices: int) -> np.random.Generator:
    """Independent generator for the work unit identified by ``indices``."""
    if master_seed < 0 or master_seed > _SEED_MASK:
        raise ValueError(f"master_seed must be an unsigned 64-bit integer, got {master_seed}")
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(i) for i in indices))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept ``None``, an int seed or a Generator (sklearn ``random_state`` idiom)."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng()
    return stream(int(rng))
