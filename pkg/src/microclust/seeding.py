"""Deterministic RNG stream derivation.

All randomized operations take an integer root seed.  Independent work units
(replicates, chains) draw from Philox counter-based streams derived as

    SeedSequence(entropy=root_seed, spawn_key=key)

so that replicate i always sees the same stream no matter how many workers
run or in which order results arrive.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream"]


def substream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for (seed, key); same inputs always give same stream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
