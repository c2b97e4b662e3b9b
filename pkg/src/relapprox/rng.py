"""Seed derivation.

Every random stage draws from its own PCG64 stream whose seed is
``blake2b(f"{master_seed}:{label}")`` truncated to 64 bits, so adding or
reordering stages never shifts the randomness of another stage.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, label: str) -> int:
    digest = hashlib.blake2b(f"{int(seed)}:{label}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stage_rng(seed: int, label: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, label)))


def as_generator(rng, label: str) -> np.random.Generator:
    """Accept a master seed (derived per ``label``) or an existing generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return stage_rng(int(rng), label)
