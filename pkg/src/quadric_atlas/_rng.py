"""Deterministic random-stream derivation.

Every randomized routine takes an integer seed and derives an independent
stream as (seed, task_label, *indices) hashed into a SeedSequence, so the
same seed reproduces the same results regardless of call order or thread
count.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np

_MOD = 2**63


def _label_token(label: str) -> int:
    digest = hashlib.blake2s(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % _MOD


def derive_rng(seed: int, label: str, *indices: int) -> np.random.Generator:
    """Generator for the sub-task stream (seed, label, indices)."""
    entropy = [int(seed) % _MOD, _label_token(label)]
    entropy.extend(int(i) % _MOD for i in indices)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def thread_count() -> int:
    """Worker count for embarrassingly parallel trials.

    Controlled by the QUADRIC_ATLAS_THREADS environment variable; defaults
    to 1 (results are identical for any value, per-trial seeding).
    """
    raw = os.environ.get("QUADRIC_ATLAS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
