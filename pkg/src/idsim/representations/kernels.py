"""Jump laws, paths on grids, and the basic representation constructors.

The strip representation V_t(r, v) = v 1{r <= t} on [0, horizon] x R
turns a scalar jump law into a process representation; with a unit point
mass it is the Poisson process, with a general finite law a compound
Poisson process.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from ..measures import AtomicMeasure, FiniteIndexSet, QUAD_LIMIT, QUAD_REL_TOL
from ..prm import LevyRepresentation


@dataclass(frozen=True)
class SamplePath:
    """Process realization on a finite time/index grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have equal length")

    def value_at(self, t: float) -> float:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * (1.0 + abs(t)):
            raise KeyError(f"time {t} not on the grid")
        return float(self.values[i])


@dataclass(frozen=True)
class ScalarMeasure:
    """Finite measure on R with a sampler for its normalized law.

    Either atomic (exact integrals) or density-backed (quadrature).  Used
    for jump-size laws and mark spaces.
    """

    total_mass: float
    sample_normalized: Callable[[np.random.Generator, int], np.ndarray]
    atoms: tuple[tuple[float, float], ...] | None = None
    density: Callable[[float], float] | None = None
    support: tuple[float, float] | None = None

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integral of a vectorized f against the (unnormalized) measure."""
        if self.atoms is not None:
            if not self.atoms:
                return 0.0
            pts = np.array([p for p, _ in self.atoms])
            wts = np.array([w for _, w in self.atoms])
            return float(np.dot(np.asarray(f(pts), dtype=float), wts))
        lo, hi = self.support
        val, _ = integrate.quad(lambda v: float(np.asarray(f(np.array([v])))[0]) * self.density(v),
                                lo, hi, epsrel=QUAD_REL_TOL, limit=QUAD_LIMIT)
        return val

    @staticmethod
    def from_atoms(atoms, total_mass: float | None = None) -> "ScalarMeasure":
        atoms = tuple((float(p), float(w)) for p, w in atoms)
        mass = sum(w for _, w in atoms)
        if total_mass is not None and abs(total_mass - mass) > 1e-12 * max(1.0, mass):
            raise ValueError("total mass does not match the atom weights")
        pts = np.array([p for p, _ in atoms])
        probs = np.array([w for _, w in atoms]) / mass if mass > 0 else np.array([])

        def sampler(rng, n):
            if mass == 0 or n == 0:
                return np.zeros(n)
            return rng.choice(pts, size=n, p=probs)

        return ScalarMeasure(total_mass=mass, sample_normalized=sampler, atoms=atoms)

    @staticmethod
    def from_density(density, support, total_mass, sampler) -> "ScalarMeasure":
        return ScalarMeasure(total_mass=float(total_mass), sample_normalized=sampler,
                             density=density, support=tuple(support))

    def as_atomic_measure(self, label="t") -> AtomicMeasure:
        if self.atoms is None:
            raise ValueError("only atomic scalar measures convert to AtomicMeasure")
        idx = FiniteIndexSet([label])
        return AtomicMeasure(idx, [((p,), w) for p, w in self.atoms])


def poisson_jump_law(rate: float) -> ScalarMeasure:
    """Jump law of a unit-jump Poisson process: mass ``rate`` at 1."""
    return ScalarMeasure.from_atoms([(1.0, rate)])


def exponential_jump_law(rate: float, mass: float) -> ScalarMeasure:
    """Exponential(rate) jump sizes with total intensity ``mass``."""

    def sampler(rng, n):
        return rng.exponential(1.0 / rate, size=n)

    return ScalarMeasure.from_density(lambda v: mass * rate * np.exp(-rate * v) if v >= 0 else 0.0,
                                      (0.0, np.inf), mass, sampler)


def levy_kernel(t: float, points: np.ndarray) -> np.ndarray:
    """Strip kernel: jump of size v arriving at time r contributes v 1{r <= t}.

    The indicator is closed at r = t.
    """
    pts = np.asarray(points)
    if pts.dtype.names:
        r, v = pts["r"], pts["v"]
    else:
        r, v = pts[..., 0], pts[..., 1]
    return np.where(r <= t, v, 0.0)


_STRIP_DTYPE = np.dtype([("r", float), ("v", float)])


def strip_points(r: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty(len(r), dtype=_STRIP_DTYPE)
    out["r"], out["v"] = r, v
    return out


def levy_strip_rep(jump_law: ScalarMeasure, horizon: float) -> LevyRepresentation:
    """Representation of a compound-Poisson-type process on [0, horizon].

    Intensity is Lebesgue x jump_law on the strip; the sampling law is the
    normalized intensity (uniform arrival time, normalized jump size), so
    g is constant 1/(horizon * |jump_law|).
    """
    theta = horizon * jump_law.total_mass
    if theta <= 0:
        raise ValueError("strip representation needs positive total intensity")

    def sample(rng, n):
        r = rng.uniform(0.0, horizon, size=n)
        v = jump_law.sample_normalized(rng, n)
        return strip_points(r, v)

    def g(pts):
        return np.full(len(pts), 1.0 / theta)

    def intensity_integral(f):
        if jump_law.atoms is not None:
            total = 0.0
            for v0, w in jump_law.atoms:
                val, _ = integrate.quad(
                    lambda r: float(np.asarray(f(strip_points(np.array([r]), np.array([v0]))))[0]),
                    0.0, horizon, epsrel=QUAD_REL_TOL, limit=QUAD_LIMIT)
                total += w * val
            return total
        lo, hi = jump_law.support

        def inner(v0):
            val, _ = integrate.quad(
                lambda r: float(np.asarray(f(strip_points(np.array([r]), np.array([v0]))))[0]),
                0.0, horizon, epsrel=QUAD_REL_TOL, limit=QUAD_LIMIT)
            return val * jump_law.density(v0)

        val, _ = integrate.quad(inner, lo, hi, epsrel=QUAD_REL_TOL, limit=QUAD_LIMIT)
        return val

    return LevyRepresentation(sample=sample, g=g, kernel=levy_kernel, finite_mass=theta,
                              intensity_integral=intensity_integral)


def scalar_mark_rep(law: ScalarMeasure) -> LevyRepresentation:
    """Representation on S = R with n = law and the identity kernel.

    The compensated integral of the identity is then an infinitely
    divisible scalar; with a unit point mass this is the Poisson mark
    space of the chi-squared examples.
    """
    theta = law.total_mass
    if theta <= 0:
        raise ValueError("mark representation needs positive total mass")

    def sample(rng, n):
        return np.asarray(law.sample_normalized(rng, n), dtype=float)

    def g(pts):
        return np.full(len(pts), 1.0 / theta)

    def kernel(t, pts):
        return np.asarray(pts, dtype=float)

    return LevyRepresentation(sample=sample, g=g, kernel=kernel, finite_mass=theta,
                              intensity_integral=law.integrate)


def compound_poisson_sample(v_sampler: Callable[[np.random.Generator], np.ndarray],
                            theta: float, grid, rng: np.random.Generator) -> SamplePath:
    """Compound Poisson path: a Poisson(theta) number of i.i.d. kernel paths.

    ``v_sampler(rng)`` returns one kernel path evaluated on ``grid``.
    """
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    grid = np.asarray(grid, dtype=float)
    count = int(rng.poisson(theta))
    values = np.zeros_like(grid)
    for _ in range(count):
        values = values + np.asarray(v_sampler(rng), dtype=float)
    return SamplePath(times=grid, values=values)


def compound_poisson_marginals(v_sampler, theta: float, grid, rng: np.random.Generator,
                               n_paths: int) -> np.ndarray:
    """Batch of compound Poisson paths as an (n_paths, len(grid)) array."""
    grid = np.asarray(grid, dtype=float)
    counts = rng.poisson(theta, size=n_paths)
    out = np.zeros((n_paths, len(grid)))
    for i, c in enumerate(counts):
        for _ in range(int(c)):
            out[i] += np.asarray(v_sampler(rng), dtype=float)
    return out
