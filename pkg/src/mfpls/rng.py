"""Seeded random streams.

All randomness goes through Philox (a counter-based 64-bit generator) keyed by
``SeedSequence(seed, spawn_key=key)``, so every (replication, purpose) pair owns
an independent, reproducible substream.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


def derive_seed(seed: int, *key: int) -> int:
    """A 32-bit integer seed derived from ``seed`` and ``key``."""
    return int(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)).generate_state(1)[0])
