"""Process models the identity verifiers operate on.

A Poissonian model couples path values on a finite grid with the driving
point configuration, so weights like N(q) are evaluated against the same
randomness that produced the path.  Functionals are vectorized callables
on an (n_reps, grid) value matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..prm import LevyRepresentation, sample_counts_and_points
from ..reports import IdentityReport, combine_z
from ..streams import mean_se, replicate, substream, trimmed_mean


class QNormalizationError(ValueError):
    """The translation weight q does not integrate to 1 against n."""


@dataclass(frozen=True)
class PoissonianProcessModel:
    """Poissonian process assembled from a finite-mass representation.

    Path values on the grid are the plain kernel sums over the driving
    configuration plus a deterministic part and an optional independent
    Brownian component (time grids only).
    """

    rep: LevyRepresentation
    grid: tuple
    deterministic: Callable[[float], float] | None = None
    gaussian_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(t) for t in self.grid))
        if self.gaussian_sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.gaussian_sigma > 0 and list(self.grid) != sorted(self.grid):
            raise ValueError("a Brownian component needs an increasing time grid")

    @property
    def dim(self) -> int:
        return len(self.grid)

    def deterministic_values(self) -> np.ndarray:
        if self.deterministic is None:
            return np.zeros(self.dim)
        return np.array([self.deterministic(t) for t in self.grid])

    def kernel_matrix(self, pts: np.ndarray) -> np.ndarray:
        """Translation paths: V_t(s) over the grid for each point s."""
        if len(pts) == 0:
            return np.zeros((0, self.dim))
        return np.column_stack([np.asarray(self.rep.kernel(t, pts), dtype=float)
                                for t in self.grid])

    def _gaussian_part(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.gaussian_sigma == 0.0:
            return 0.0
        times = np.asarray(self.grid)
        dt = np.diff(np.concatenate([[0.0], times]))
        incr = rng.standard_normal((n, self.dim)) * np.sqrt(dt)
        return self.gaussian_sigma * np.cumsum(incr, axis=1)

    def sample_paths_with_points(self, rng: np.random.Generator, n: int):
        """Jointly sample n paths and their driving points.

        Returns (values (n, d), flat_points, rep_index).
        """
        counts, flat, idx = sample_counts_and_points(self.rep, rng, n)
        K = self.kernel_matrix(flat)
        X = np.empty((n, self.dim))
        for j in range(self.dim):
            X[:, j] = np.bincount(idx, weights=K[:, j], minlength=n)
        X += self.deterministic_values()
        X += self._gaussian_part(rng, n)
        return X, flat, idx

    def sample_paths(self, rng: np.random.Generator, n: int) -> np.ndarray:
        X, _, _ = self.sample_paths_with_points(rng, n)
        return X


def check_q_normalization(rep: LevyRepresentation, q, seed, expected: float = 1.0,
                          probes: int = 40_000, tol: float = 0.01) -> float:
    """Monte-Carlo check that the q-mass against n equals ``expected``.

    Uses importance reweighting by 1/g from the sampling law; raises
    :class:`QNormalizationError` beyond tol plus sampling noise.
    """
    rng = substream(seed, 977)
    pts = rep.sample(rng, probes)
    vals = np.asarray(q(pts), dtype=float) / np.asarray(rep.g(pts), dtype=float)
    m, se = mean_se(vals)
    if abs(m - expected) > tol + 4.0 * se:
        raise QNormalizationError(
            f"q integrates to {m:.5f} +/- {se:.5f} against n, expected {expected}")
    return m


def ratio_mean_se(weighted_values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """Self-normalized importance-sampling mean and delta-method SE.

    Estimates E[F] under the normalized weight law from per-replication
    pairs (w F, w); the O(1/n) ratio bias is far below the standard error
    at the replication counts used here.
    """
    n = len(weights)
    wbar = np.mean(weights)
    if wbar == 0:
        return 0.0, 0.0
    mu = float(np.sum(weighted_values) / (wbar * n))
    influence = (weighted_values - mu * weights) / wbar
    se = float(np.std(influence, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mu, se


def weighted_arm_report(name: str, lhs_pairs: np.ndarray, rhs: np.ndarray,
                        z_crit: float = 4.0, extra: dict | None = None) -> IdentityReport:
    """Report with a self-normalized left arm (columns w F, w) and a plain
    right arm."""
    lm, ls = ratio_mean_se(lhs_pairs[:, 0], lhs_pairs[:, 1])
    rm, rs = mean_se(rhs)
    return IdentityReport(name=name, lhs_mean=lm, lhs_se=ls, rhs_mean=rm, rhs_se=rs,
                          z=combine_z(lm, ls, rm, rs), reps=len(rhs), z_crit=z_crit,
                          lhs_trimmed=trimmed_mean(lhs_pairs[:, 0]),
                          rhs_trimmed=trimmed_mean(rhs), extra=extra or {})


def two_arm_report(name: str, lhs: np.ndarray, rhs: np.ndarray, z_crit: float = 4.0,
                   paired: bool = False, extra: dict | None = None) -> IdentityReport:
    """Assemble an IdentityReport from per-replication arm values."""
    if paired:
        diff = lhs - rhs
        dm, dse = mean_se(diff)
        lm, ls = mean_se(lhs)
        rm, rs = mean_se(rhs)
        z = dm / dse if dse > 0 else (0.0 if dm == 0 else math.inf)
    else:
        lm, ls = mean_se(lhs)
        rm, rs = mean_se(rhs)
        z = combine_z(lm, ls, rm, rs)
    return IdentityReport(name=name, lhs_mean=lm, lhs_se=ls, rhs_mean=rm, rhs_se=rs,
                          z=z, reps=len(lhs), z_crit=z_crit, paired=paired,
                          lhs_trimmed=trimmed_mean(lhs), rhs_trimmed=trimmed_mean(rhs),
                          extra=extra or {})
