"""Seed derivation: every random stream is (master seed, component name, indices)."""

import zlib

import numpy as np


def derive_seed(master: int, component: str, *index: int) -> int:
    """Stable 63-bit seed for a named component, independent of call order."""
    if master < 0:
        raise ValueError("seeds must be nonnegative")
    key = [int(master), zlib.crc32(component.encode()), *(int(i) for i in index)]
    state = np.random.SeedSequence(key).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1
