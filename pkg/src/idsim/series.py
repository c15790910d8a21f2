"""Shot-noise series realizations of Poissonian infinitely divisible paths.

A realization draws unit-rate arrival marks Gamma_1 < Gamma_2 < ... up to a
budget, attaches i.i.d. sample points, keeps the terms with
g(point) <= 1/Gamma, and sums kernel values over the grid with optional
centering: either a single compensator c(t) (for nonnegative or otherwise
summable kernels) or per-term compensators

    c_j(t) = integral of trunc(V_t(s)) [(j g(s) min 1) - ((j-1) g(s) min 1)] n(ds).

Randomness is split into fixed lanes (ladder, marks, payloads) so that
enlarging the budget only appends terms for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .measures import CutoffFunction, INDICATOR_CUTOFF
from .prm import LevyRepresentation, gamma_ladder
from .representations.excursions import (
    ExcursionPoint,
    ExcursionTilt,
    canonical_tilt,
    local_time,
    normalized_excursion,
    sample_tilted_length,
)
from .representations.kernels import SamplePath, ScalarMeasure, levy_strip_rep


class SeriesBudgetError(RuntimeError):
    """No term was retained while the discarded window mass is infinite."""


@dataclass(frozen=True)
class SeriesConfig:
    """Recipe for one shot-noise series realization.

    ``shift`` is the path shift b(t); with centering 'none' the additional
    compensator c(t) is subtracted (computed from the representation when
    not supplied).  ``centering_support`` marks the largest term index with
    a nonvanishing per-term compensator when that is known (constant-g
    finite-mass spaces), so deterministic tail compensators are included
    exactly.
    """

    rep: LevyRepresentation
    gamma_budget: float
    time_grid: tuple
    centering: str = "none"
    shift: Callable[[float], float] | None = None
    compensation: Callable[[float], float] | None = None
    chi: CutoffFunction = INDICATOR_CUTOFF
    centering_support: int | None = None

    def __post_init__(self):
        if self.gamma_budget <= 0:
            raise ValueError("gamma budget must be positive")
        grid = tuple(float(t) for t in self.time_grid)
        if not grid:
            raise ValueError("time grid must be nonempty")
        object.__setattr__(self, "time_grid", grid)
        if self.centering not in ("none", "per-term"):
            raise ValueError("centering must be 'none' or 'per-term'")


@dataclass(frozen=True)
class SeriesRealization:
    """One series path plus truncation bookkeeping."""

    path: SamplePath
    terms_used: int
    discarded_mass: float
    retained_marks: np.ndarray


def _weight_increment(g: np.ndarray, j: int) -> np.ndarray:
    return np.minimum(j * g, 1.0) - np.minimum((j - 1) * g, 1.0)


@lru_cache(maxsize=None)
def centering_term(cfg: SeriesConfig, j: int, t: float) -> float:
    """Per-term compensator c_j(t) by integration against the intensity.

    Vanishes identically once (j-1) g >= 1 everywhere (finite-mass spaces
    with constant g and j beyond the mass).
    """
    rep = cfg.rep
    if rep.intensity_integral is None:
        raise ValueError("per-term centering requires an intensity integrator")
    chi = cfg.chi

    def integrand(pts: np.ndarray) -> np.ndarray:
        v = np.asarray(rep.kernel(t, pts), dtype=float)
        return v * chi(np.abs(v)) * _weight_increment(np.asarray(rep.g(pts)), j)

    return rep.intensity_integral(integrand)


def centering_partial_sums(cfg: SeriesConfig, t: float, j_max: int) -> np.ndarray:
    """Partial sums of c_j(t), for convergence (Cauchy-behavior) diagnostics."""
    terms = [centering_term(cfg, j, t) for j in range(1, j_max + 1)]
    return np.cumsum(terms)


def centering_cauchy_flag(cfg: SeriesConfig, t: float, j_max: int = 64,
                          tol: float = 1e-8) -> bool:
    """True when the compensator partial sums look Cauchy by ``j_max``.

    Purely numerical: existence of the limit is an analytic hypothesis the
    tool cannot decide, it can only flag visibly non-settling sums.
    """
    sums = centering_partial_sums(cfg, t, j_max)
    tail = np.abs(np.diff(sums[-8:]))
    return bool(np.all(tail <= tol * (1.0 + np.abs(sums[-1]))))


def _discarded_mass(rep: LevyRepresentation, tau: float) -> float:
    if rep.intensity_integral is None:
        return math.inf
    try:
        val = rep.intensity_integral(
            lambda pts: np.clip(1.0 - tau * np.asarray(rep.g(pts), dtype=float), 0.0, None))
    except Exception:
        return math.inf
    return float(val) if math.isfinite(val) else math.inf


def generate_series(cfg: SeriesConfig, rng: np.random.Generator) -> SeriesRealization:
    """Draw one truncated series realization on the configured grid."""
    lane_ladder, lane_marks = rng.spawn(2)
    gammas = gamma_ladder(lane_ladder, cfg.gamma_budget)
    n_terms = len(gammas)
    pts = cfg.rep.sample(lane_marks, n_terms)
    gvals = np.asarray(cfg.rep.g(pts), dtype=float) if n_terms else np.zeros(0)
    keep = gvals * gammas <= 1.0 if n_terms else np.zeros(0, dtype=bool)
    kept_pts = pts[keep]
    retained = int(keep.sum())

    discarded = _discarded_mass(cfg.rep, cfg.gamma_budget)
    if retained == 0 and not math.isfinite(discarded):
        raise SeriesBudgetError(
            "gamma budget retained no terms and the discarded window mass is infinite")

    shift = cfg.shift or (lambda t: 0.0)
    values = np.empty(len(cfg.time_grid))
    for i, t in enumerate(cfg.time_grid):
        total = float(np.sum(cfg.rep.kernel(t, kept_pts))) if retained else 0.0
        if cfg.centering == "per-term":
            j_hi = n_terms if cfg.centering_support is None else max(n_terms,
                                                                     cfg.centering_support)
            total -= math.fsum(centering_term(cfg, j, t) for j in range(1, j_hi + 1))
        else:
            if cfg.compensation is not None:
                total -= cfg.compensation(t)
            elif cfg.rep.intensity_integral is not None:
                total -= cfg.rep.intensity_integral(
                    lambda p: (lambda v: v * cfg.chi(np.abs(v)))(
                        np.asarray(cfg.rep.kernel(t, p), dtype=float)))
        values[i] = total + shift(t)
    path = SamplePath(times=np.array(cfg.time_grid), values=values)
    return SeriesRealization(path=path, terms_used=retained, discarded_mass=discarded,
                             retained_marks=gammas[keep] if n_terms else gammas)


def levy_series(jump_law: ScalarMeasure, drift: float, gamma_budget: float, time_grid,
                rng: np.random.Generator, horizon: float | None = None,
                chi: CutoffFunction = INDICATOR_CUTOFF) -> SeriesRealization:
    """Series path of a finite-activity scalar jump process on [0, horizon].

    Per-term centering is used (required for two-sided jump laws); for a
    symmetric law every compensator vanishes.  The path shift is
    drift * t plus the truncation compensator t * integral of trunc(v).
    """
    cfg = levy_series_config(jump_law, drift, gamma_budget, time_grid, chi, horizon)
    return generate_series(cfg, rng)


def _empty_strip_rep() -> LevyRepresentation:
    from .representations.kernels import levy_kernel, strip_points

    return LevyRepresentation(
        sample=lambda rng, n: strip_points(np.zeros(n), np.zeros(n)),
        g=lambda pts: np.full(len(pts), np.inf),
        kernel=levy_kernel,
        finite_mass=0.0,
        intensity_integral=lambda f: 0.0,
    )


def levy_series_config(jump_law: ScalarMeasure, drift: float, gamma_budget: float,
                       time_grid, chi: CutoffFunction = INDICATOR_CUTOFF,
                       horizon: float | None = None) -> SeriesConfig:
    grid = tuple(float(t) for t in time_grid)
    if horizon is None:
        horizon = max(grid)
    if jump_law.total_mass == 0:
        return SeriesConfig(rep=_empty_strip_rep(), gamma_budget=gamma_budget, time_grid=grid,
                            centering="none", compensation=lambda t: 0.0,
                            shift=lambda t: drift * t, chi=chi, centering_support=0)
    rep = levy_strip_rep(jump_law, horizon)
    theta = rep.finite_mass
    kappa1 = jump_law.integrate(lambda v: np.asarray(v) * chi(np.abs(np.asarray(v))))
    shift = lambda t: drift * t + kappa1 * t
    return SeriesConfig(rep=rep, gamma_budget=gamma_budget, time_grid=grid,
                        centering="per-term", shift=shift, chi=chi,
                        centering_support=int(math.ceil(theta)))


def _grid_points_for(length: float, min_level: float, m_base: int, m_cap: int) -> int:
    """Grid size resolving the excursion near ``min_level``.

    The bottom of a long excursion is only resolved when the spatial step
    sqrt(length/m) is about a third of the level or less; lengths beyond
    the cap stay partially resolved (they are rare enough that their
    fraction bounds the distributional error).
    """
    if min_level <= 0.0 or not math.isfinite(min_level):
        return m_base
    needed = int(math.ceil(9.0 * length / (min_level * min_level)))
    return int(np.clip(needed, m_base, m_cap))


def _excursion_table(lengths: np.ndarray, rng: np.random.Generator, min_level: float,
                     m_base: int, m_cap: int) -> list[ExcursionPoint]:
    out = []
    for length in lengths:
        m = _grid_points_for(float(length), min_level, m_base, m_cap)
        shape = normalized_excursion(m, rng)
        out.append(ExcursionPoint(length=float(length), path=math.sqrt(length) * shape))
    return out


def _bandwidth(exc: ExcursionPoint, scale: float | None, level: float) -> float:
    """Occupation bandwidth: the configured scale capped at half the level,
    so the window stays inside the positive range of the path."""
    base = exc.default_bandwidth() if scale is None else scale * math.sqrt(exc.length)
    return min(base, 0.5 * level)


def feller_series(a: float, sigma: float, f_tilt: ExcursionTilt | None, gamma_budget: float,
                  time_grid, rng: np.random.Generator, m: int = 2001,
                  m_cap: int = 400_000, bandwidth_scale: float | None = None,
                  lt_method: str = "interp") -> SeriesRealization:
    """Square-root diffusion path from a trimmed sample of excursions.

    Kernel terms are total local times at level sigma^2 t / 4 of excursions
    drawn with tilt f; a term is retained when f(R) <= a / Gamma.  The
    kernel is nonnegative and needs no centering; the initial value a is
    the path value at t = 0, where every kernel term vanishes.  Long
    excursions get finer time grids (up to ``m_cap`` points) so the
    occupation estimate at the smallest positive level stays resolved.
    """
    if a <= 0:
        raise ValueError("initial value a must be positive")
    tilt = f_tilt if f_tilt is not None else canonical_tilt()
    grid = tuple(float(t) for t in time_grid)
    kappa = sigma * sigma / 4.0
    positive = [kappa * t for t in grid if t > 0.0]
    min_level = min(positive) if positive else math.inf
    lane_ladder, lane_len, lane_shape = rng.spawn(3)
    gammas = gamma_ladder(lane_ladder, gamma_budget)
    lengths = sample_tilted_length(tilt, lane_len, len(gammas))
    gvals = np.asarray(tilt(lengths), dtype=float) / a
    keep = gvals * gammas <= 1.0
    kept = lengths[keep]
    excs = _excursion_table(kept, lane_shape, min_level, m, m_cap)

    values = np.empty(len(grid))
    for i, t in enumerate(grid):
        if t == 0.0:
            values[i] = a
            continue
        level = kappa * t
        values[i] = math.fsum(
            local_time(exc, level, _bandwidth(exc, bandwidth_scale, level), lt_method)
            for exc in excs)
    path = SamplePath(times=np.array(grid), values=values)
    return SeriesRealization(path=path, terms_used=int(keep.sum()), discarded_mass=math.inf,
                             retained_marks=gammas[keep])


def besq_series(beta: float, gamma_budget: float, time_grid, rng: np.random.Generator,
                m: int = 2001, m_cap: int = 400_000,
                f_tilt: ExcursionTilt | None = None,
                bandwidth_scale: float | None = None,
                lt_method: str = "interp") -> SeriesRealization:
    """Squared-Bessel path from 0: excursions arriving at exponential marks.

    Points are pairs (arrival r, excursion u) with r exponential of rate
    beta under the sampling law and g(r, u) = exp(-beta r) f(R(u)); the
    kernel is the local time at level t - r (zero at or below level zero),
    so the path starts at 0.  Per-excursion grids refine with the length
    and the smallest level the term is evaluated at, capped at ``m_cap``.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    tilt = f_tilt if f_tilt is not None else canonical_tilt()
    grid = tuple(float(t) for t in time_grid)
    t_max = max(grid)
    lane_ladder, lane_eta, lane_len, lane_shape = rng.spawn(4)
    gammas = gamma_ladder(lane_ladder, gamma_budget)
    n = len(gammas)
    etas = lane_eta.exponential(1.0 / beta, size=n)
    lengths = sample_tilted_length(tilt, lane_len, n)
    gvals = np.exp(-beta * etas) * np.asarray(tilt(lengths), dtype=float)
    keep = gvals * gammas <= 1.0
    retained = int(keep.sum())

    # Excursions arriving at or after the horizon never contribute to the
    # grid; skip their payloads (mark-measurable, so prefix-safe).
    relevant = keep & (etas < t_max)
    rel_etas = etas[relevant]
    rel_lengths = lengths[relevant]
    excs = []
    for r, length in zip(rel_etas, rel_lengths):
        min_level = min((t - r) for t in grid if t > r)
        m_i = _grid_points_for(float(length), min_level, m, m_cap)
        shape = normalized_excursion(m_i, lane_shape)
        excs.append(ExcursionPoint(length=float(length), path=math.sqrt(length) * shape))

    values = np.empty(len(grid))
    for i, t in enumerate(grid):
        acc = 0.0
        for r, exc in zip(rel_etas, excs):
            if r < t:
                level = t - r
                acc += local_time(exc, level, _bandwidth(exc, bandwidth_scale, level),
                                  lt_method)
        values[i] = acc
    path = SamplePath(times=np.array(grid), values=values)
    return SeriesRealization(path=path, terms_used=retained, discarded_mass=math.inf,
                             retained_marks=gammas[keep])
