"""Per-trial random streams and order-preserving trial fan-out.

Every trial draws from its own Philox4x64-10 stream whose 128-bit key is
``seed + (trial << 64)`` and whose counter starts at zero. Results are
therefore a function of ``(seed, trial)`` alone, whatever the number of
workers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

R = TypeVar("R")

SEED_MASK = (1 << 64) - 1


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    if not 0 <= seed <= SEED_MASK:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if trial < 0:
        raise ValueError("trial index must be nonnegative")
    return np.random.Generator(np.random.Philox(key=seed + (trial << 64)))


def map_trials(fn: Callable[[int], R], trials: int, workers: int = 1) -> list[R]:
    """Evaluate ``fn(i)`` for ``i in range(trials)``, results ordered by ``i``.

    With ``workers > 1`` the calls run on a thread pool; the compiled
    kernels release the GIL so this scales on the Cython backend.
    """
    if workers <= 1 or trials <= 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))
