"""Counter-based stream derivation so parallel chains never share RNG state."""

from __future__ import annotations

import numpy as np

from .indices import MultiIndex

_TAGS = {"chain": 1, "prior": 2, "data": 3, "mcmc": 4, "init": 5}


def derive_rng(seed: int, tag: str, alpha: MultiIndex = (), replicate: int = 0) -> np.random.Generator:
    """Independent generator keyed by (experiment seed, purpose, replicate, alpha)."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), _TAGS[tag], int(replicate), *map(int, alpha)])
    )
