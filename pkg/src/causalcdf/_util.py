"""Seeding and worker-pool helpers.

Every stochastic routine derives a child generator from ``rng_for`` so that a
run is reproducible from its master seed alone, independent of scheduling or
worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

THREADS_ENV_VAR = "CAUSALCDF_THREADS"


def float_bits(x: float) -> int:
    """Stable integer encoding of a float, usable as seed entropy."""
    return int(np.float64(x).view(np.uint64))


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Child generator for (seed, key...); identical inputs give identical streams."""
    return np.random.default_rng(np.random.SeedSequence((int(seed), *map(int, key))))


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Map ``fn`` over ``items`` preserving order.

    With ``threads > 1`` the work runs in a process pool, so ``fn`` and every
    item must be picklable.  Results are returned in input order regardless of
    completion order, which keeps downstream aggregation deterministic.
    """
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
