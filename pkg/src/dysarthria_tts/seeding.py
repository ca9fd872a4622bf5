"""Stable seed derivation so per-utterance randomness is order-independent."""

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """64-bit seed from a tuple of ints/strings, stable across runs and platforms."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        data = str(part).encode("utf-8")
        h.update(len(data).to_bytes(4, "little"))
        h.update(data)
    return int.from_bytes(h.digest(), "little")


def utterance_rng(plan_seed: int, utterance_id: str, variant_index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(plan_seed, utterance_id, variant_index))
