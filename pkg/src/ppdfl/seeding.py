"""Stable derivation of independent RNG substreams from one master seed."""

import hashlib
import random

import numpy as np


def derive_seed(*parts) -> int:
    """Collapse a tag tuple into a 64-bit seed, stable across processes."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(*parts) -> random.Random:
    return random.Random(derive_seed(*parts))


def derive_generator(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
