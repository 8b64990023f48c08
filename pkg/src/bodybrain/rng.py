"""Deterministic random stream derivation.

Every stochastic step of a run draws from its own generator, derived from
the master seed plus a tuple of tags (purpose string, generation,
individual slot). Streams therefore never depend on scheduling order,
which keeps runs reproducible under any worker count.
"""

import hashlib

import numpy as np


def _tag_entropy(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(master_seed: int, *tags) -> np.random.Generator:
    """Return a generator unique to (master_seed, *tags)."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF]
    entropy.extend(_tag_entropy(t) for t in tags)
    return np.random.default_rng(np.random.SeedSequence(entropy))
