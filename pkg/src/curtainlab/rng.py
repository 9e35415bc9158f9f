"""Counter-based random streams for reproducible, trial-parallel experiments.

Every trial gets its own Philox stream keyed by (master seed, trial index),
so trials can run in any order or in parallel and still produce bit-identical
results. Increment draws consume exactly one uniform each, which keeps the
per-step stream layout stable across code paths.
"""

from __future__ import annotations

import numpy as np

__all__ = ["trial_generator", "increment_indices"]


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Philox stream for one trial, keyed by (master seed, trial index)."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(trial)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def increment_indices(seed: int, trial: int, n: int, weights) -> np.ndarray:
    """Indices of the n increments of one trial, one uniform draw per step.

    The same function backs both the per-step trajectory API and the batched
    displacement kernels, so the two always see identical increment streams.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-d sequence")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    cum = np.cumsum(w)
    if abs(cum[-1] - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    cum[-1] = 1.0
    u = trial_generator(seed, trial).random(n)
    return np.searchsorted(cum, u, side="right").astype(np.int64)
