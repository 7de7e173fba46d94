"""Counter-based derivation of random streams from one root seed.

Every consumer asks for a stream by a tuple of keys (scenario name, block
index, ...). The stream depends only on the root seed and the keys, never on
the order in which streams are requested, so chunked and threaded sampling
reproduce the serial result bit for bit.
"""

from __future__ import annotations

import zlib
from typing import Union

import numpy as np

Key = Union[str, int]


def _key_word(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & 0xFFFFFFFF


def seed_sequence(root_seed: int, *keys: Key) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(root_seed), spawn_key=tuple(_key_word(k) for k in keys))


def generator(root_seed: int, *keys: Key) -> np.random.Generator:
    """Independent PCG64 stream for ``keys`` under ``root_seed``."""
    return np.random.default_rng(seed_sequence(root_seed, *keys))


def derive_seed(root_seed: int, *keys: Key) -> int:
    """Child seed as a plain 63-bit integer (recorded in report metadata)."""
    state = seed_sequence(root_seed, *keys).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))
