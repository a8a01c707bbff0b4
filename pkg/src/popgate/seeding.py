"""Deterministic seed derivation.

Distinct pipeline stages need independent RNG streams that are still pure
functions of one user-facing seed. Hashing (base, label) keeps streams
uncorrelated without any global RNG state.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(base: int, label: str) -> int:
    digest = hashlib.sha256(f"{base}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(base: int, label: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(base, label))
