"""
Seeded randomness. Every consumer asks for a named sub-stream of the run
seed so that adding a consumer never shifts another consumer's draws.
"""

from zlib import crc32

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, crc32(name.encode())])


def random_bits(rng: np.random.Generator, bits: int) -> int:
    """Uniform integer in [0, 2**bits)."""
    if bits <= 0:
        return 0
    value = int.from_bytes(rng.bytes((bits + 7) // 8), "big")
    return value >> (-bits % 8)


def random_below(rng: np.random.Generator, bound: int) -> int:
    """Uniform integer in [0, bound) by rejection sampling."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    bits = (bound - 1).bit_length()
    while True:
        value = random_bits(rng, bits)
        if value < bound:
            return value


def random_between(rng: np.random.Generator, low: int, high: int) -> int:
    """Uniform integer in [low, high]."""
    return low + random_below(rng, high - low + 1)
