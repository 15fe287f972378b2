"""
The project's random number generator.

All randomness flows through numpy's Philox counter-based generator, seeded
by a SeedSequence built from a base seed plus a tuple of integer keys. The
same (seed, keys) always yields the same stream, independent of process,
thread or execution order, which is what lets trial chunks run in parallel
and still reproduce the sequential result.
"""

from typing import Union

import numpy as np

RNG_ALGORITHM = "numpy.random.Philox(SeedSequence(seed, spawn_key=keys))"

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        # stable across interpreters, unlike hash()
        return int.from_bytes(key.encode("utf-8"), "little")
    if key < 0:
        raise ValueError(f"seed keys must be non-negative, got {key}")
    return int(key)


def make_rng(seed: int, *keys: Key) -> np.random.Generator:
    """Generator for the stream identified by (seed, keys)."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_to_int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(seed: int, *keys: Key) -> int:
    """A 63-bit integer seed for the stream (seed, keys), for APIs that take a plain seed."""
    return int(make_rng(seed, *keys).integers(0, 2 ** 63 - 1))
