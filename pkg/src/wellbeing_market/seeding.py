"""Deterministic seed derivation.

All randomness in a run flows from one root seed. Stages and parallel
tasks never share a generator; they derive child seeds with
``child_seed(root, label)`` so results do not depend on execution order
or thread count.
"""

from __future__ import annotations

import hashlib

import numpy as np


def child_seed(root_seed: int, label: str | int) -> int:
    """Derive a child seed from a root seed and a task label.

    Uses SHA-256 over the (seed, label) pair, so distinct labels give
    independent streams and the mapping is stable across platforms.
    """
    digest = hashlib.sha256(f"{root_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def generator(root_seed: int, label: str | int | None = None) -> np.random.Generator:
    """Seeded ``numpy`` generator, optionally namespaced by ``label``."""
    seed = root_seed if label is None else child_seed(root_seed, label)
    return np.random.default_rng(seed)
