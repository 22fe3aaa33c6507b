"""Seed-derivation helpers for reproducible, splittable random streams.

Every Monte Carlo task gets its own generator derived from the master seed
and a structural path (cell index, replication index, ...).  Results are
then identical for any execution order or worker count.
"""

from __future__ import annotations

import numpy as np


def substream(seed, *path) -> np.random.Generator:
    """Return a generator for the task identified by ``path`` under ``seed``.

    ``path`` entries must be non-negative integers.  Distinct paths yield
    statistically independent streams; the same (seed, path) always yields
    the same stream.
    """
    key = tuple(int(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def as_generator(random_state) -> np.random.Generator:
    """Coerce None / int / Generator into a numpy Generator."""
    if random_state is None:
        return np.random.default_rng()
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(int(random_state))
