"""Coordinate size-bias identity for nonnegative infinitely divisible
vectors with finite means.

Reweighting by Y_k / E[Y_k] equals translating by an independent vector
drawn from the mixture: zero with probability drift_k / E[Y_k], otherwise
the jump measure weighted by its k-th coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..measures import AtomicMeasure
from ..reports import IdentityReport
from ..streams import replicate
from .models import two_arm_report


@dataclass(frozen=True)
class SizeBiasModel:
    """Nonnegative ID vector: drift plus finite-activity jumps.

    ``sample_y`` draws the vector itself; ``sample_jump_section`` draws
    from the k-coordinate-weighted normalized jump measure.  ``jump_mean``
    holds the coordinate means of the jump part, so theta_k = drift_k +
    jump_mean_k.
    """

    dim: int
    drift: np.ndarray
    jump_mean: np.ndarray
    sample_y: Callable[[np.random.Generator, int], np.ndarray]
    sample_jump_section: Callable[[np.random.Generator, int, int], np.ndarray]

    def theta(self, k: int) -> float:
        return float(self.drift[k] + self.jump_mean[k])

    def sample_translation(self, rng: np.random.Generator, n: int, k: int) -> np.ndarray:
        """Mixture draw: zero path w.p. drift_k/theta_k, else the weighted
        jump section."""
        th = self.theta(k)
        z = self.sample_jump_section(rng, n, k)
        if self.drift[k] > 0:
            at_zero = rng.uniform(size=n) < self.drift[k] / th
            z = np.where(at_zero[:, None], 0.0, z)
        return z


def gamma_vector_model(shapes, drifts=None) -> SizeBiasModel:
    """Independent coordinates: Y_i = drift_i + Gamma(shape_i, 1).

    The k-weighted jump section is a unit exponential in coordinate k and
    zero elsewhere (the density algebra y exp(-y)/y of the gamma jump
    measure), so size-biasing coordinate k adds an independent Exp(1)
    there.
    """
    shapes = np.asarray(shapes, dtype=float)
    dim = len(shapes)
    drifts = np.zeros(dim) if drifts is None else np.asarray(drifts, dtype=float)
    if np.any(shapes <= 0) or np.any(drifts < 0):
        raise ValueError("shapes must be positive and drifts nonnegative")

    def sample_y(rng, n):
        return drifts + rng.gamma(shape=shapes, scale=1.0, size=(n, dim))

    def sample_jump_section(rng, n, k):
        z = np.zeros((n, dim))
        z[:, k] = rng.exponential(1.0, size=n)
        return z

    return SizeBiasModel(dim=dim, drift=drifts, jump_mean=shapes,
                         sample_y=sample_y, sample_jump_section=sample_jump_section)


def atomic_id_model(drift, nu: AtomicMeasure) -> SizeBiasModel:
    """Nonnegative ID vector with drift and a finite atomic jump measure.

    Y is drift plus a compound Poisson sum over the atoms; the k-weighted
    section is an exact categorical draw with probabilities proportional
    to point_k * weight.
    """
    drift = np.asarray(drift, dtype=float)
    dim = nu.index_set.dimension
    if np.any(nu.points < 0):
        raise ValueError("jump measure must live on the nonnegative orthant")
    pts, wts = nu.points, nu.weights
    theta_jump = (pts * wts[:, None]).sum(axis=0)
    total = nu.total_mass
    probs = wts / total if total > 0 else wts

    def sample_y(rng, n):
        counts = rng.poisson(total, size=n)
        y = np.tile(drift, (n, 1))
        if total > 0:
            flat = rng.choice(len(wts), size=int(counts.sum()), p=probs)
            idx = np.repeat(np.arange(n), counts)
            for j in range(dim):
                y[:, j] += np.bincount(idx, weights=pts[flat, j], minlength=n)
        return y

    def sample_jump_section(rng, n, k):
        mass = pts[:, k] * wts
        if mass.sum() <= 0:
            return np.zeros((n, dim))
        choice = rng.choice(len(wts), size=n, p=mass / mass.sum())
        return pts[choice]

    return SizeBiasModel(dim=dim, drift=drift, jump_mean=theta_jump,
                         sample_y=sample_y, sample_jump_section=sample_jump_section)


def drift_only_model(drift) -> SizeBiasModel:
    """Deterministic vector: Y identically equal to its drift."""
    drift = np.asarray(drift, dtype=float)
    dim = len(drift)
    return SizeBiasModel(
        dim=dim, drift=drift, jump_mean=np.zeros(dim),
        sample_y=lambda rng, n: np.tile(drift, (n, 1)),
        sample_jump_section=lambda rng, n, k: np.zeros((n, dim)))


def verify_size_bias(model: SizeBiasModel, k: int, functional, reps: int, seed,
                     z_crit: float = 4.0) -> IdentityReport:
    """Check E F(Y + Z^k) = E[F(Y) Y_k] / theta_k by independent arms."""
    th = model.theta(k)
    if not (0.0 < th < math.inf):
        raise ValueError("coordinate mean must be positive and finite")

    def lhs_worker(rng, n):
        y = model.sample_y(rng, n)
        z = model.sample_translation(rng, n, k)
        return np.asarray(functional(y + z), dtype=float)

    def rhs_worker(rng, n):
        y = model.sample_y(rng, n)
        return np.asarray(functional(y), dtype=float) * y[:, k] / th

    lhs = replicate(reps, seed, lhs_worker, lane=0)
    rhs = replicate(reps, seed, rhs_worker, lane=1)
    return two_arm_report("size_bias", lhs, rhs, z_crit)


def reconstructed_jump_measure(model: SizeBiasModel, test_fn, k: int, seed,
                               probes: int = 200_000) -> float:
    """Monte-Carlo integral of a test function against the jump measure
    reconstructed from the k-th translation law.

    On {y_k > 0} the jump measure is theta_k y_k^(-1) times the law of
    Z^k, so integrals of functions supported there are expectations of
    theta_k f(Z) / Z_k.  Used to cross-check the reconstruction formulas.
    """
    from ..streams import substream

    rng = substream(seed, 0)
    z = model.sample_jump_section(rng, probes, k)
    zk = z[:, k]
    keep = zk > 0
    vals = np.zeros(probes)
    vals[keep] = np.asarray(test_fn(z[keep]), dtype=float) / zk[keep]
    jump_total = model.jump_mean[k]
    return float(jump_total * vals.mean()) if jump_total > 0 else 0.0
