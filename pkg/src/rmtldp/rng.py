"""Counter-based random streams for reproducible parallel Monte Carlo.

Every consumer of randomness gets its own Philox stream derived from a
64-bit master seed and an integer path, so results never depend on thread
count or execution order.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream"]


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for (seed, path).

    Identical (seed, path) always yields an identical stream; distinct
    paths yield statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seed=ss))
