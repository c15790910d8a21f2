"""Transient finite-state chains, their potential matrices and local times,
and permanental vectors (multivariate-gamma laws with determinantal
Laplace transforms).

Time is continuized: each visit of the discrete-step chain contributes an
independent unit-mean exponential holding time to the local time, so that
E_x(local time at y) equals the potential matrix entry u(x, y) and the
last-visit-conditioned Laplace transform takes its exact determinantal
form.  Raw visit counts are exposed separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

GREEN_REL_TOL = 1e-10


class NonTransientChainError(ValueError):
    """The kernel is not strictly substochastic in spectrum (no killing)."""


def green_matrix(kernel: np.ndarray) -> np.ndarray:
    """Potential matrix U = (I - P)^(-1): expected total visit counts.

    Entry (x, y) is the expected number of visits to y (counting the start
    when x = y) of the chain started at x and killed by the substochastic
    deficiency of P.
    """
    P = np.asarray(kernel, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("kernel must be a square matrix")
    if np.any(P < 0) or np.any(P.sum(axis=1) > 1.0 + 1e-12):
        raise ValueError("kernel must be substochastic with nonnegative entries")
    radius = float(np.max(np.abs(np.linalg.eigvals(P))))
    if radius >= 1.0 - 1e-12:
        raise NonTransientChainError(f"spectral radius {radius:.6f} is not < 1")
    n = P.shape[0]
    return np.linalg.solve(np.eye(n) - P, np.eye(n))


@dataclass(frozen=True)
class MarkovChainModel:
    """Finite-state substochastic chain with its potential matrix."""

    states: tuple
    kernel: np.ndarray
    green: np.ndarray = field(default=None)

    def __init__(self, states: Sequence, kernel, green=None):
        states = tuple(states)
        kernel = np.asarray(kernel, dtype=float)
        if kernel.shape != (len(states), len(states)):
            raise ValueError("kernel shape must match the number of states")
        computed = green_matrix(kernel)
        if green is not None:
            green = np.asarray(green, dtype=float)
            if not np.allclose(green, computed, rtol=GREEN_REL_TOL, atol=0):
                raise ValueError("supplied potential matrix disagrees with (I - P)^(-1)")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "green", computed)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def state_index(self, state) -> int:
        return self.states.index(state)

    def to_json(self) -> dict:
        return {"states": list(self.states), "P": self.kernel.tolist()}

    @staticmethod
    def from_json(doc: Mapping) -> "MarkovChainModel":
        return MarkovChainModel(doc["states"], doc["P"])


def _simulate_counts(chain: MarkovChainModel, start: int, rng: np.random.Generator,
                     n_reps: int, truncate_at_last_visit: bool) -> np.ndarray:
    """Visit counts of n_reps killed trajectories from ``start``.

    With truncation, counts are taken over the trajectory up to and
    including its last visit to the start state (the start itself always
    counts as a visit).
    """
    d = chain.n_states
    cum = np.cumsum(chain.kernel, axis=1)
    state = np.full(n_reps, start, dtype=int)
    alive = np.ones(n_reps, dtype=bool)
    counts = np.zeros((n_reps, d), dtype=np.int64)
    counts[:, start] = 1
    snapshot = counts.copy()
    while alive.any():
        idx = np.flatnonzero(alive)
        u = rng.uniform(size=len(idx))
        rows = cum[state[idx]]
        nxt = (u[:, None] > rows).sum(axis=1)
        died = nxt >= d
        keep = idx[~died]
        alive[idx[died]] = False
        if len(keep):
            s = nxt[~died]
            state[keep] = s
            counts[keep, s] += 1
            at_anchor = keep[s == start]
            snapshot[at_anchor] = counts[at_anchor]
    return snapshot if truncate_at_last_visit else counts


def sample_visit_counts(chain: MarkovChainModel, start, rng: np.random.Generator,
                        n_reps: int = 1) -> np.ndarray:
    """Raw visit counts of the unconditioned killed chain from ``start``.

    Row means converge to the corresponding row of the potential matrix.
    """
    return _simulate_counts(chain, chain.state_index(start), rng, n_reps, False)


def sample_local_times_tilde(chain: MarkovChainModel, anchor, rng: np.random.Generator,
                             n_reps: int = 1) -> np.ndarray:
    """Local-time vectors of the chain started at ``anchor`` and killed at
    its last visit to it (that visit included).

    The trajectory is the unconditioned one truncated at the last anchor
    visit; each counted visit contributes a unit-mean exponential holding
    time, so the (n_reps, n_states) output has continuous entries with
    E[L^anchor] = u(anchor, anchor) and the exact determinantal Laplace
    transform of the last-visit-conditioned process.
    """
    a = chain.state_index(anchor)
    if chain.green[a, a] <= 0:
        raise ValueError("anchor must have positive potential")
    counts = _simulate_counts(chain, a, rng, n_reps, True)
    out = np.zeros(counts.shape)
    pos = counts > 0
    out[pos] = rng.gamma(shape=counts[pos].astype(float), scale=1.0)
    return out


def local_time_laplace_transform(green: np.ndarray, anchor: int, s: np.ndarray) -> float:
    """Closed form of E exp(-sum s_x L^x) under last-visit conditioning.

    Equals the anchor-diagonal entry of (I + U S)^(-1) U divided by
    u(anchor, anchor), i.e. the s_anchor-derivative of log det(I + U S)
    normalized by the anchor potential.
    """
    U = np.asarray(green, dtype=float)
    S = np.diag(np.asarray(s, dtype=float))
    M = np.linalg.solve(np.eye(len(s)) + U @ S, U)
    return float(M[anchor, anchor] / U[anchor, anchor])


@dataclass(frozen=True)
class PermanentalModel:
    """Positive vector law with Laplace transform det(I + U S)^(-alpha).

    Exact sampling needs a half-integer order: with 2 alpha = k the vector
    is half the componentwise sum of squares of k independent centered
    Gaussian vectors with covariance U.
    """

    green: np.ndarray
    alpha: float
    states: tuple = ()

    def __post_init__(self):
        U = np.asarray(self.green, dtype=float)
        object.__setattr__(self, "green", U)
        if not self.states:
            object.__setattr__(self, "states", tuple(range(U.shape[0])))
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ValueError("kernel must be square")
        if not np.allclose(U, U.T, atol=1e-12, rtol=0):
            raise ValueError("kernel must be symmetric")
        if np.min(np.linalg.eigvalsh(U)) <= 0:
            raise ValueError("kernel must be positive definite")
        k = 2.0 * self.alpha
        if self.alpha <= 0 or abs(k - round(k)) > 1e-12:
            raise ValueError("exact sampling requires alpha to be a positive half-integer")

    @property
    def n_gaussians(self) -> int:
        return int(round(2.0 * self.alpha))

    @property
    def dimension(self) -> int:
        return self.green.shape[0]

    def laplace_transform(self, s: np.ndarray) -> float:
        S = np.diag(np.asarray(s, dtype=float))
        det = float(np.linalg.det(np.eye(self.dimension) + self.green @ S))
        return det ** (-self.alpha)

    def to_json(self) -> dict:
        return {"states": list(self.states), "U": self.green.tolist(), "alpha": self.alpha}

    @staticmethod
    def from_json(doc: Mapping) -> "PermanentalModel":
        return PermanentalModel(green=np.asarray(doc["U"], dtype=float), alpha=doc["alpha"],
                                states=tuple(doc.get("states", ())))


def sample_permanental(model: PermanentalModel, rng: np.random.Generator,
                       n_reps: int = 1) -> np.ndarray:
    """Exact half-integer-order sampler: half the sum of k squared Gaussians.

    Returns an (n_reps, dimension) array; marginals are gamma with shape
    alpha and mean alpha * u(x, x).
    """
    chol = np.linalg.cholesky(model.green)
    k, d = model.n_gaussians, model.dimension
    eta = rng.standard_normal((n_reps, k, d)) @ chol.T
    return 0.5 * np.sum(eta * eta, axis=1)
