"""Seedable, splittable random generators.

Every stochastic operation in driftopt takes an explicit ``numpy.random.Generator``.
Named streams let independent stages (environment, logging, deployment, ...) draw
from non-overlapping sequences derived from a single experiment seed.
"""

import hashlib

import numpy as np


def stream_key(name: str) -> int:
    """Stable 64-bit key for a stream name (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int, stream: str | None = None) -> np.random.Generator:
    spawn_key = () if stream is None else (stream_key(stream),)
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(sequence))


def spawn_rngs(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Split ``rng`` into ``n`` independent child generators."""
    return list(rng.spawn(n))
