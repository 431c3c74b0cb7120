"""Seed derivation.

Every random consumer (split, folds, per-tree bootstrap, weight init, ...)
gets its own PCG64 stream derived from the run seed plus a tuple of keys, so
results never depend on the order in which jobs are scheduled.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"seed keys must be non-negative, got {key}")
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def seed_sequence(seed: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
        spawn_key=tuple(_key_to_int(k) for k in keys),
    )


def generator(seed: int, *keys) -> np.random.Generator:
    """Independent ``Generator`` for the purpose identified by ``keys``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))


def derive_seed(seed: int, *keys) -> int:
    """64-bit integer sub-seed, for components that take a plain int."""
    return int(seed_sequence(seed, *keys).generate_state(1, dtype=np.uint64)[0])
