"""Deterministic RNG construction.

All stochastic code paths take explicit integer seeds and build Philox
generators here, so seeds compose hierarchically (e.g. run seed, then step,
then layer) without correlated streams.
"""

from __future__ import annotations

import numpy as np


def rng_for(*key: int) -> np.random.Generator:
    """Counter-based generator keyed by one or more non-negative integers."""
    if not key:
        raise ValueError("at least one key component required")
    return np.random.Generator(np.random.Philox(list(key)))
