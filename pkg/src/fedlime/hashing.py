"""FNV-1a hashing and seed derivation.

Everything that needs a stable integer from a string (feature indices, child
RNG seeds) goes through :func:`fnv1a64`, so results never depend on Python's
per-process ``hash`` randomisation.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK
    return h


@lru_cache(maxsize=1 << 18)
def hash_str(text: str) -> int:
    return fnv1a64(text.encode("utf-8"))


def derive_seed(*parts: int | str) -> int:
    """Deterministic 63-bit child seed from an ordered tuple of ints/strings."""
    key = "\x1f".join(f"{type(p).__name__}:{p}" for p in parts)
    return hash_str(key) >> 1


def make_rng(*parts: int | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
