"""Deterministic derivation of RNG streams from a master seed.

Every stochastic step in the simulator draws from its own stream keyed by
(master seed, purpose, indices...). Parallel and sequential execution of
per-client work therefore produce identical results, and two runs with the
same config are bit-identical.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts: object) -> int:
    """Hash (seed, tag, indices...) into a stable 64-bit stream seed."""
    key = "/".join(str(p) for p in parts).encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(*parts: object) -> np.random.Generator:
    """Generator for the stream identified by the given key parts."""
    return np.random.default_rng(derive_seed(*parts))
