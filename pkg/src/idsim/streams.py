"""Reproducible random-number streams and order-independent aggregation.

All samplers in this package take an explicit generator (or a seed) and
replicated experiments run on counter-based Philox sub-streams derived
deterministically from (master seed, chunk index).  Worker count never
changes which stream a replication sees, so reports are bit-stable for a
fixed seed regardless of IDSIM_THREADS.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

# Fixed chunk size: chunk boundaries are part of the determinism contract.
CHUNK = 16384


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Normalize ``seed`` (int, SeedSequence or Generator) to a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        ss = seed.bit_generator.seed_seq
        if ss is None:
            raise ValueError("generator has no seed sequence; pass an integer seed")
        return ss
    return np.random.SeedSequence(seed)


def substream(seed, *key: int) -> np.random.Generator:
    """Philox generator for sub-stream ``key`` of the master ``seed``.

    Distinct keys give statistically independent counter-based streams and
    the mapping is pure: the same (seed, key) always yields the same stream.
    """
    ss = as_seed_sequence(seed)
    child = np.random.SeedSequence(entropy=ss.entropy, spawn_key=ss.spawn_key + tuple(key))
    return np.random.Generator(np.random.Philox(child))


def n_workers() -> int:
    """Worker count for replication fan-out (env IDSIM_THREADS, default 1)."""
    raw = os.environ.get("IDSIM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def chunk_sizes(total: int, chunk: int = CHUNK) -> list[int]:
    full, rem = divmod(total, chunk)
    return [chunk] * full + ([rem] if rem else [])


def replicate(total: int, seed, worker: Callable[[np.random.Generator, int], np.ndarray],
              lane: int = 0) -> np.ndarray:
    """Run ``worker(rng, n)`` over fixed-size chunks and concatenate results.

    ``worker`` must return one value per replication (an (n,) array or an
    (n, k) array).  Chunk ``i`` sees substream(seed, lane, i); results are
    concatenated in chunk order, so the output is invariant to the number
    of threads actually used.
    """
    sizes = chunk_sizes(total)
    jobs = [(i, n) for i, n in enumerate(sizes)]

    def run(job):
        i, n = job
        return worker(substream(seed, lane, i), n)

    workers = n_workers()
    if workers == 1 or len(jobs) <= 1:
        parts = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    return np.concatenate(parts, axis=0)


def fsum(values: Sequence[float] | np.ndarray) -> float:
    """Exactly rounded (hence order-independent) float sum."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def mean_se(values: np.ndarray) -> tuple[float, float]:
    """Sample mean and standard error with compensated summation."""
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if n == 0:
        return 0.0, 0.0
    m = fsum(x) / n
    if n == 1:
        return m, 0.0
    var = fsum((x - m) ** 2) / (n - 1)
    return m, math.sqrt(var / n)


def trimmed_mean(values: np.ndarray, frac: float = 0.001) -> float:
    """Two-sided trimmed mean, used only as a heavy-tail diagnostic."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    k = int(frac * x.size)
    if x.size - 2 * k <= 0:
        return float(np.mean(x)) if x.size else 0.0
    return fsum(x[k : x.size - k]) / (x.size - 2 * k)
