"""Seed splitting.

Every random stream in the package is derived from one user seed plus a
tuple of integer keys (stream id, trial index, ...).  Streams are built on
the counter-based Philox generator so that two different key tuples never
share state, and the result of a trial does not depend on which worker
evaluated it.
"""

from __future__ import annotations

import zlib

import numpy as np

MAX_SEED = 2**64 - 1


def stream_id(name: str) -> int:
    """Stable integer id for a named stream."""
    return zlib.crc32(name.encode("utf-8"))


def make_rng(seed: int, *keys: int | str) -> np.random.Generator:
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    spawn_key = tuple(stream_id(k) if isinstance(k, str) else int(k) for k in keys)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, shape, scale: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with E|x|^2 = scale**2."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (scale / np.sqrt(2.0)) * (re + 1j * im)
