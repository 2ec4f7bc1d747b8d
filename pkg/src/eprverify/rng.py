"""Splittable counter-based random streams.

Every sampled computation in the package is a pure function of (inputs, seed).
Streams are Philox generators keyed by (seed, stream index), so trial k of an
experiment draws from ``stream(seed, k)`` no matter how trials are scheduled
across workers.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for the given (seed, stream index) pair."""
    key = [int(seed) & _MASK64, int(index) & _MASK64]
    return np.random.Generator(np.random.Philox(key=key))
