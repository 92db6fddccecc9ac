"""Counter-based random streams.

Every draw is addressed by (seed, round); within a round, sample i always
consumes slot i of the block.  Estimators therefore produce identical
output under any execution order or worker count for a fixed seed.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def uniform_block(seed: int, round_idx: int, n: int, dim: int = 1) -> np.ndarray:
    """Deterministic (n, dim) uniform block for the given (seed, round)."""
    bg = np.random.Philox(key=[seed & _MASK, round_idx & _MASK])
    return np.random.Generator(bg).random((n, dim))
