"""Poisson random measures on representation spaces.

A :class:`LevyRepresentation` packages everything the samplers need about
a measure space (S, n) carrying a kernel V_t: a sampler for an equivalent
probability law n1, the density g = dn1/dn, the kernel itself, and (when
available) the total mass of n and an integrator for test functions.

Point batches are plain numpy arrays (float, structured or object dtype);
``sample`` returns a batch of n points, ``g`` and ``kernel`` map a batch
to a float vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from .measures import CutoffFunction, INDICATOR_CUTOFF
from .reports import CfReport, IdentityReport, combine_z
from .streams import fsum, mean_se, replicate, substream, trimmed_mean


@dataclass(frozen=True)
class LevyRepresentation:
    """Kernel V on a measure space (S, n) with an equivalent sampling law.

    ``sample(rng, n)`` draws n i.i.d. points from n1, ``g`` is the density
    of n1 with respect to n (strictly positive on the support), ``kernel``
    evaluates V_t over a batch.  ``finite_mass`` is the total mass of n
    when finite, in which case the natural choice is g = 1/finite_mass and
    the direct Poisson sampler applies.  ``intensity_integral`` computes
    integrals of vectorized test functions against n when the space admits
    one (atomic marks, or one-dimensional densities by quadrature).
    """

    sample: Callable[[np.random.Generator, int], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    kernel: Callable[[Any, np.ndarray], np.ndarray]
    finite_mass: float | None = None
    intensity_integral: Callable[[Callable[[np.ndarray], np.ndarray]], float] | None = None

    def require_finite_mass(self) -> float:
        if self.finite_mass is None:
            raise ValueError("operation requires a representation with finite total mass")
        return self.finite_mass

    def with_mass_scale(self, factor: float) -> "LevyRepresentation":
        """Same sampling law, intensity scaled by ``factor`` (n -> factor*n)."""
        base_g = self.g
        base_int = self.intensity_integral
        return replace(
            self,
            g=lambda pts: np.asarray(base_g(pts)) / factor,
            finite_mass=None if self.finite_mass is None else self.finite_mass * factor,
            intensity_integral=None if base_int is None else (lambda f: factor * base_int(f)),
        )


@dataclass(frozen=True)
class PointConfiguration:
    """One realization of a Poisson random measure: a finite point list.

    ``marks`` carries the arrival ladder values when the configuration was
    produced by the windowed sampler.  Order never matters downstream.
    """

    points: np.ndarray
    marks: np.ndarray | None = None
    n_candidates: int = 0

    def __len__(self) -> int:
        return len(self.points)

    def with_point(self, point) -> "PointConfiguration":
        extra = np.asarray([point], dtype=self.points.dtype) if len(self.points) else \
            np.asarray([point])
        return PointConfiguration(points=np.concatenate([self.points, extra]), marks=None,
                                  n_candidates=self.n_candidates)

    def merge(self, other: "PointConfiguration") -> "PointConfiguration":
        return PointConfiguration(points=np.concatenate([self.points, other.points]))


def sample_prm_finite(rep: LevyRepresentation, rng: np.random.Generator) -> PointConfiguration:
    """Direct sampler for a finite-intensity PRM: Poisson count, i.i.d. points.

    Requires the representation's sampling law to be n normalized by its
    total mass (g identically 1/finite_mass), which is how all finite-mass
    constructors in this package are built.
    """
    theta = rep.require_finite_mass()
    count = int(rng.poisson(theta))
    return PointConfiguration(points=rep.sample(rng, count), n_candidates=count)


def sample_counts_and_points(rep: LevyRepresentation, rng: np.random.Generator,
                             n_reps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch form of :func:`sample_prm_finite` across ``n_reps`` replications.

    Returns (counts, flat_points, rep_index); configuration i owns the flat
    points with rep_index == i.
    """
    theta = rep.require_finite_mass()
    counts = rng.poisson(theta, size=n_reps)
    flat = rep.sample(rng, int(counts.sum()))
    rep_idx = np.repeat(np.arange(n_reps), counts)
    return counts, flat, rep_idx


def gamma_ladder(rng: np.random.Generator, budget: float, block: int = 512) -> np.ndarray:
    """Standard-exponential partial sums up to ``budget``.

    Drawn in fixed blocks from the stream so that enlarging the budget only
    appends to the ladder for a fixed generator state (prefix property).
    """
    if budget <= 0:
        return np.zeros(0)
    out = []
    total = 0.0
    while True:
        csum = total + np.cumsum(rng.standard_exponential(block))
        hit = int(np.searchsorted(csum, budget, side="right"))
        out.append(csum[:hit])
        if hit < block:
            return np.concatenate(out) if len(out) > 1 else out[0]
        total = csum[-1]


def sample_prm_thinned(rep: LevyRepresentation, gamma_budget: float,
                       rng: np.random.Generator) -> PointConfiguration:
    """Windowed PRM via marked arrivals thinned by the density g.

    Draws the arrival ladder Gamma_1 < Gamma_2 < ... until it exceeds the
    budget, attaches an i.i.d. point from n1 to each arrival and keeps the
    pairs with g(point) <= 1/Gamma.  The retained points form a PRM with
    intensity n restricted to {(s, r): r <= 1/g(s), r <= budget}; boundary
    ties are retained.
    """
    if gamma_budget < 0:
        raise ValueError("gamma budget must be nonnegative")
    gammas = gamma_ladder(rng, gamma_budget)
    pts = rep.sample(rng, len(gammas))
    if len(gammas) == 0:
        return PointConfiguration(points=pts, marks=gammas, n_candidates=0)
    keep = np.asarray(rep.g(pts)) * gammas <= 1.0
    return PointConfiguration(points=pts[keep], marks=gammas[keep], n_candidates=len(gammas))


def compensated_integral(config: PointConfiguration, f: Callable[[np.ndarray], np.ndarray],
                         chi: CutoffFunction = INDICATOR_CUTOFF,
                         compensator: Callable[[Callable, CutoffFunction], float] | None = None,
                         compensator_value: float | None = None) -> float:
    """Sum of f over the configuration minus the intensity compensator.

    The compensator supplies the integral of f * chi(f) against n, either
    as a closed-form callable of (f, chi) or as a precomputed value.
    """
    if compensator_value is None:
        compensator_value = 0.0 if compensator is None else float(compensator(f, chi))
    if not math.isfinite(compensator_value):
        raise ValueError("compensator is not finite")
    total = fsum(np.asarray(f(config.points), dtype=float)) if len(config) else 0.0
    return total - compensator_value


def n_of_q(config: PointConfiguration, q: Callable[[np.ndarray], np.ndarray]) -> float:
    """Integral of a nonnegative weight q against the point configuration."""
    if len(config) == 0:
        return 0.0
    return fsum(np.asarray(q(config.points), dtype=float))


def _cf_oracle(rep: LevyRepresentation, f, chi: CutoffFunction, theta: float) -> complex:
    if rep.intensity_integral is None:
        raise ValueError("representation carries no intensity integrator for the cf oracle")

    def integrand(pts: np.ndarray) -> np.ndarray:
        fv = np.asarray(f(pts), dtype=float)
        return np.exp(1j * theta * fv) - 1.0 - 1j * theta * fv * chi(np.abs(fv))

    re = rep.intensity_integral(lambda p: np.real(integrand(p)))
    im = rep.intensity_integral(lambda p: np.imag(integrand(p)))
    return complex(np.exp(re + 1j * im))


def empirical_cf_check(rep: LevyRepresentation, f, chi: CutoffFunction, theta_grid,
                       reps: int, seed) -> CfReport:
    """Empirical characteristic function of the compensated integral vs oracle.

    For each theta the sample mean of exp(i theta I_N(f)) over fresh PRM
    realizations is compared with the exponential-integral oracle computed
    by quadrature/summation against n.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    comp = rep.intensity_integral(lambda p: np.asarray(f(p)) * chi(np.abs(np.asarray(f(p)))))

    def worker(rng, n):
        counts, flat, idx = sample_counts_and_points(rep, rng, n)
        fv = np.asarray(f(flat), dtype=float) if len(flat) else np.zeros(0)
        sums = np.bincount(idx, weights=fv, minlength=n)
        return sums - comp

    integrals = replicate(reps, seed, worker)
    emp, orc, zs = [], [], []
    for theta in theta_grid:
        vals = np.exp(1j * theta * integrals)
        m_re, se_re = mean_se(vals.real)
        m_im, se_im = mean_se(vals.imag)
        mean = complex(m_re, m_im)
        oracle = _cf_oracle(rep, f, chi, theta)
        se = math.hypot(se_re, se_im)
        dev = abs(mean - oracle)
        zs.append(dev / se if se > 0 else (0.0 if dev == 0 else math.inf))
        emp.append(mean)
        orc.append(oracle)
    return CfReport(thetas=theta_grid, empirical=np.array(emp), oracle=np.array(orc),
                    z_scores=np.array(zs), reps=reps)


def mecke_palm_check(rep: LevyRepresentation, h, reps: int, seed,
                     z_crit: float = 4.0) -> IdentityReport:
    """Property test of the point-process balance formula.

    Left arm: expected sum of h(s, N) over the points of N.  Right arm:
    integral against n of the expectation of h(s, N + delta_s), estimated
    by sampling s from n1 with importance weight 1/g(s).  ``h`` takes a
    single point and a :class:`PointConfiguration`.
    """
    rep.require_finite_mass()

    def lhs_worker(rng, n):
        counts, flat, idx = sample_counts_and_points(rep, rng, n)
        starts = np.concatenate([[0], np.cumsum(counts)]).astype(int)
        out = np.empty(n)
        for i in range(n):
            pts = flat[starts[i]:starts[i + 1]]
            cfg = PointConfiguration(points=pts)
            out[i] = fsum([h(p, cfg) for p in pts]) if len(pts) else 0.0
        return out

    def rhs_worker(rng, n):
        counts, flat, idx = sample_counts_and_points(rep, rng, n)
        starts = np.concatenate([[0], np.cumsum(counts)]).astype(int)
        extra = rep.sample(rng, n)
        weights = 1.0 / np.asarray(rep.g(extra), dtype=float)
        out = np.empty(n)
        for i in range(n):
            cfg = PointConfiguration(points=flat[starts[i]:starts[i + 1]])
            out[i] = h(extra[i], cfg.with_point(extra[i])) * weights[i]
        return out

    lhs = replicate(reps, seed, lhs_worker, lane=0)
    rhs = replicate(reps, seed, rhs_worker, lane=1)
    lm, ls = mean_se(lhs)
    rm, rs = mean_se(rhs)
    return IdentityReport(name="mecke_palm", lhs_mean=lm, lhs_se=ls, rhs_mean=rm, rhs_se=rs,
                          z=combine_z(lm, ls, rm, rs), reps=reps, z_crit=z_crit,
                          lhs_trimmed=trimmed_mean(lhs), rhs_trimmed=trimmed_mean(rhs))
