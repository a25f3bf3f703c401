"""Deterministic seed derivation.

Every random quantity in an experiment is drawn from a generator whose seed is
derived from ``(master_seed, *keys)`` through :class:`numpy.random.SeedSequence`.
Trial ``t`` of axis point ``k`` always gets ``derive_seed(master, k, t)``, so
results do not depend on the order in which trials execute.
"""

import numpy as np


def derive_seed(*keys: int) -> int:
    """Return a 64-bit seed determined by the integer ``keys``."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def rng_for(*keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*keys))
