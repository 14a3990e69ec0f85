from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")


def chunk_sizes(total: int, chunk_size: int) -> list[int]:
    """Split ``total`` into consecutive chunks of at most ``chunk_size``."""
    if total < 0 or chunk_size < 1:
        raise ValueError(f"bad chunking total={total}, chunk_size={chunk_size}")
    full, rest = divmod(total, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for chunk ``index``; depends only on (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def map_chunks(
    fn: Callable[[int, int, np.random.Generator], T],
    total: int,
    seed: int,
    chunk_size: int,
    threads: int = 1,
) -> list[T]:
    """
    Run fn(index, size, rng) over the chunks of ``total`` and return the
    results in chunk-index order, so reductions do not depend on ``threads``.
    """
    sizes = chunk_sizes(total, chunk_size)
    jobs = [(i, size, chunk_rng(seed, i)) for i, size in enumerate(sizes)]
    if threads <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, *job) for job in jobs]
        return [f.result() for f in futures]


def batch_means_stderr(values: np.ndarray, n_batches: int = 50) -> float:
    """Standard error of the mean of a correlated series by non-overlapping batch means."""
    values = np.asarray(values, dtype=float).reshape(-1)
    n_batches = min(n_batches, values.size)
    if n_batches < 2:
        return float("inf")
    usable = values[: values.size - values.size % n_batches]
    means = usable.reshape(n_batches, -1).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(n_batches))
