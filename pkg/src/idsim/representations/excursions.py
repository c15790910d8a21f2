"""Positive excursions, tilted length sampling and occupation densities.

An excursion is discretized on m grid points over [0, R].  The normalized
shape comes from the cyclic-shift-at-the-argmin transform of a discretized
Brownian bridge (O(m), exact in law for the discretized bridge), and the
length R is drawn from the sampling tilt f against the raw length tail
x^(-1/2)/sqrt(2 pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from ..measures import QUAD_LIMIT, QUAD_REL_TOL

SQRT_2PI = math.sqrt(2.0 * math.pi)


def excursion_length_tail(x: float) -> float:
    """Raw (untilted) mass of excursions longer than x: x^(-1/2)/sqrt(2 pi)."""
    return x ** (-0.5) / SQRT_2PI


def raw_length_density(x: np.ndarray) -> np.ndarray:
    """Density of the raw length measure: x^(-3/2) / (2 sqrt(2 pi))."""
    x = np.asarray(x, dtype=float)
    return x ** (-1.5) / (2.0 * SQRT_2PI)


@dataclass(frozen=True)
class ExcursionTilt:
    """Sampling tilt f for the excursion length: one excursion is drawn per
    unit of f(R)-weighted raw length mass.

    Normalization requires the tilted length density f(x) x^(-3/2) /
    (2 sqrt(2 pi)) to integrate to one.  ``ratio_bound`` dominates
    f(x) / f_canonical(x) for rejection sampling from the canonical
    envelope f_c(x) = sqrt(pi/2) (x min 1).
    """

    f: Callable[[np.ndarray], np.ndarray]
    ratio_bound: float = 1.0
    is_canonical: bool = False

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))


def canonical_tilt() -> ExcursionTilt:
    """The closed-form tilt f(x) = sqrt(pi/2) (x min 1).

    Its tilted length density is x^(-1/2)/4 on (0, 1] and x^(-3/2)/4 on
    (1, inf), sampled exactly by inverse CDF; P(R <= 1) = 1/2.
    """
    c = math.sqrt(math.pi / 2.0)
    return ExcursionTilt(f=lambda x: c * np.minimum(np.asarray(x, dtype=float), 1.0),
                         ratio_bound=1.0, is_canonical=True)


def excursion_tilt(f: Callable, ratio_bound: float, check: bool = True) -> ExcursionTilt:
    """Custom tilt with a normalization check of its tilted length density."""
    if check:
        dens = lambda x: float(f(np.array([x]))[0]) * x ** (-1.5) / (2.0 * SQRT_2PI)
        lo, _ = integrate.quad(dens, 0.0, 1.0, epsrel=QUAD_REL_TOL, limit=QUAD_LIMIT)
        hi, _ = integrate.quad(dens, 1.0, np.inf, epsrel=QUAD_REL_TOL, limit=QUAD_LIMIT)
        if abs(lo + hi - 1.0) > 1e-6:
            raise ValueError(f"tilted length density integrates to {lo + hi:.8f}, not 1")
    return ExcursionTilt(f=f, ratio_bound=float(ratio_bound))


def sample_tilted_length(tilt: ExcursionTilt, rng: np.random.Generator,
                         n: int = 1) -> np.ndarray:
    """Draw excursion lengths from the tilted density.

    The canonical tilt inverts the two analytic CDF branches; other tilts
    use rejection from the canonical envelope.
    """
    if tilt.is_canonical:
        u = rng.uniform(size=n)
        return np.where(u <= 0.5, (2.0 * u) ** 2, (2.0 * (1.0 - u)) ** -2)
    canon = canonical_tilt()
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = max(n - filled, 64)
        x = sample_tilted_length(canon, rng, m)
        ratio = np.asarray(tilt(x), dtype=float) / np.asarray(canon(x), dtype=float)
        accept = rng.uniform(size=m) * tilt.ratio_bound <= ratio
        got = x[accept]
        take = min(len(got), n - filled)
        out[filled:filled + take] = got[:take]
        filled += take
    return out


@dataclass(frozen=True)
class ExcursionPoint:
    """Discretized positive excursion: length R and m path values on [0, R]."""

    length: float
    path: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "path", np.asarray(self.path, dtype=float))
        if len(self.path) < 3:
            raise ValueError("an excursion needs at least 3 grid points")
        if self.path[0] != 0.0 or self.path[-1] != 0.0:
            raise ValueError("excursion endpoints must be zero")

    @property
    def m(self) -> int:
        return len(self.path)

    @property
    def dt(self) -> float:
        return self.length / (self.m - 1)

    def default_bandwidth(self) -> float:
        return math.sqrt(self.length) * self.m ** -0.25


def normalized_excursion(m: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-length excursion shape from a cyclically shifted Brownian bridge."""
    if m < 3:
        raise ValueError("m must be at least 3")
    dt = 1.0 / (m - 1)
    w = np.concatenate([[0.0], np.cumsum(rng.standard_normal(m - 1) * math.sqrt(dt))])
    bridge = w - np.linspace(0.0, 1.0, m) * w[-1]
    core = bridge[:-1]
    k = int(np.argmin(core))
    e = np.empty(m)
    e[:-1] = np.roll(core, -k) - core[k]
    e[-1] = 0.0
    e[0] = 0.0
    return e


def sample_excursion(tilt: ExcursionTilt | None, m: int, rng: np.random.Generator,
                     length: float | None = None) -> ExcursionPoint:
    """Draw one excursion: tilted length, Brownian scaling of a unit shape.

    Passing ``length`` skips the length draw (used when lengths are sampled
    in batch).
    """
    if length is None:
        if tilt is None:
            raise ValueError("either a tilt or an explicit length is required")
        length = float(sample_tilted_length(tilt, rng, 1)[0])
    shape = normalized_excursion(m, rng)
    return ExcursionPoint(length=length, path=math.sqrt(length) * shape)


def _occupation_grid(path: np.ndarray, dt: float, lo: float, hi: float) -> float:
    """Trapezoidal time measure of {grid t: path(t) in (lo, hi)}."""
    w = np.ones(len(path))
    w[0] = w[-1] = 0.5
    inside = (path > lo) & (path < hi)
    return dt * float(np.dot(w, inside))


def _occupation_interp(path: np.ndarray, dt: float, lo: float, hi: float) -> float:
    """Exact occupation of (lo, hi) for the piecewise-linear interpolant."""
    y0, y1 = path[:-1], path[1:]
    seg_lo = np.minimum(y0, y1)
    seg_hi = np.maximum(y0, y1)
    overlap = np.clip(np.minimum(seg_hi, hi) - np.maximum(seg_lo, lo), 0.0, None)
    span = seg_hi - seg_lo
    flat = span == 0.0
    frac = np.empty_like(span)
    frac[~flat] = overlap[~flat] / span[~flat]
    frac[flat] = ((seg_lo[flat] > lo) & (seg_lo[flat] < hi)).astype(float)
    return dt * float(np.sum(frac))


def local_time(exc: ExcursionPoint, level: float, bandwidth: float | None = None,
               method: str = "grid") -> float:
    """Occupation-density estimate of the total local time at ``level``.

    Returns occupation{|path - level| < bandwidth} / (2 bandwidth), zero by
    convention for level <= 0.  ``method`` 'grid' counts grid samples with
    trapezoid weights; 'interp' uses the exact occupation time of the
    piecewise-linear path, which tolerates much smaller bandwidths.
    """
    if level <= 0.0:
        return 0.0
    if bandwidth is None:
        bandwidth = exc.default_bandwidth()
    if bandwidth <= 0.0:
        raise ValueError("bandwidth must be positive")
    lo, hi = level - bandwidth, level + bandwidth
    if method == "grid":
        occ = _occupation_grid(exc.path, exc.dt, lo, hi)
    elif method == "interp":
        occ = _occupation_interp(exc.path, exc.dt, lo, hi)
    else:
        raise ValueError(f"unknown local-time method {method!r}")
    return occ / (2.0 * bandwidth)


def local_time_profile(exc: ExcursionPoint, levels: np.ndarray,
                       bandwidth: float | None = None, method: str = "grid") -> np.ndarray:
    """Vector of local-time estimates over a level grid."""
    return np.array([local_time(exc, a, bandwidth, method) for a in np.asarray(levels)])


def besq_kernel(t: float, r: float, exc: ExcursionPoint, bandwidth: float | None = None,
                method: str = "grid") -> float:
    """Squared-Bessel representation kernel: local time at level t - r."""
    return local_time(exc, t - r, bandwidth, method)


def feller_kernel(t: float, exc: ExcursionPoint, sigma: float,
                  bandwidth: float | None = None, method: str = "grid") -> float:
    """Feller-diffusion representation kernel: local time at level sigma^2 t / 4."""
    return local_time(exc, sigma * sigma * t / 4.0, bandwidth, method)
