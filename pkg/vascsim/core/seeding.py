"""
Master-seed derivation.

Every random stream in a run is a pure function of the master seed and a tuple
of keys (cohort, subject index, disease, method, combination, fold...), so the
order in which parallel workers execute never changes a result.
"""

import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def key_to_int(key: Key) -> int:
    """Map a key to a non-negative integer; strings go through crc32"""
    if isinstance(key, (bool, np.bool_)):
        raise TypeError("Boolean seed keys are ambiguous")
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"Seed keys must be non-negative, got {key}")
        return int(key)
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    raise TypeError(f"Unsupported seed key type: {type(key).__name__}")


def derive_seed_sequence(master: int, *keys: Key) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master)] + [key_to_int(k) for k in keys])


def derive_rng(master: int, *keys: Key) -> np.random.Generator:
    return np.random.default_rng(derive_seed_sequence(master, *keys))


def derive_int_seed(master: int, *keys: Key) -> int:
    """A 63-bit integer seed for components that take a plain int"""
    state = derive_seed_sequence(master, *keys).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])
