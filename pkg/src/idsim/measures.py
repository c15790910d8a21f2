"""Finite-index-set jump-measure algebra.

Measures here live on R^I for a finite ordered index set I and carry no
mass at the origin (after :func:`minimal_extension`).  Atomic measures are
the workhorse; a one-dimensional density-backed variant integrates by
adaptive quadrature.  Everything is immutable and pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import integrate, stats

from .reports import ValidationReport, WitnessReport

# Atoms closer than this (max-norm, relative to 1 + point norm) merge.
ATOM_MERGE_TOL = 1e-12
# Atom-set equality allows weight slack of this times the total mass.
WEIGHT_TOL = 1e-12
# Quadrature settings for density-backed measures.
QUAD_REL_TOL = 1e-8
QUAD_LIMIT = 200
# Guard for condition (a) of validate_levy_measure: the per-coordinate
# sums are finite for any finite atom list, so only overflow can fail.
OVERFLOW_BOUND = 1e300


class CutoffKind(Enum):
    INDICATOR_UNIT_BALL = "indicator-unit-ball"
    INVERSE_MAX = "inverse-max"
    INVERSE_QUADRATIC = "inverse-quadratic"


@dataclass(frozen=True)
class CutoffFunction:
    """Bounded cutoff chi with chi(0) = 1, used to center small jumps.

    The three supported kinds are 1{|v|<=1}, 1/(1 max |v|) and 1/(1+v^2).
    """

    kind: CutoffKind = CutoffKind.INDICATOR_UNIT_BALL

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        a = np.abs(v)
        if self.kind is CutoffKind.INDICATOR_UNIT_BALL:
            out = (a <= 1.0).astype(float)
        elif self.kind is CutoffKind.INVERSE_MAX:
            out = 1.0 / np.maximum(1.0, a)
        else:
            out = 1.0 / (1.0 + v * v)
        return out if out.ndim else float(out)


INDICATOR_CUTOFF = CutoffFunction(CutoffKind.INDICATOR_UNIT_BALL)
INVERSE_MAX_CUTOFF = CutoffFunction(CutoffKind.INVERSE_MAX)
INVERSE_QUADRATIC_CUTOFF = CutoffFunction(CutoffKind.INVERSE_QUADRATIC)


def truncate(v, chi: CutoffFunction = INDICATOR_CUTOFF):
    """Componentwise small-jump truncation: v_k -> v_k * chi(|v_k|)."""
    v = np.asarray(v, dtype=float)
    return v * chi(np.abs(v))


class IndexError_(KeyError):
    """An index set is not a subset of the one it should project from."""


@dataclass(frozen=True)
class FiniteIndexSet:
    """Ordered finite collection of distinct opaque index labels."""

    labels: tuple

    def __init__(self, labels: Iterable):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ValueError("index labels must be distinct")
        object.__setattr__(self, "labels", labels)

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def is_subset_of(self, other: "FiniteIndexSet") -> bool:
        return set(self.labels) <= set(other.labels)

    def positions_in(self, other: "FiniteIndexSet") -> np.ndarray:
        if not self.is_subset_of(other):
            raise IndexError_(f"{self.labels} is not a subset of {other.labels}")
        pos = {lab: i for i, lab in enumerate(other.labels)}
        return np.array([pos[lab] for lab in self.labels], dtype=int)


def _merge_atoms(points: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Canonical form: lexicographically sorted atoms, near-equal points merged."""
    if len(weights) == 0:
        return points.reshape(0, points.shape[1] if points.ndim == 2 else 0), weights
    order = np.lexsort(points.T[::-1])
    points, weights = points[order], weights[order]
    keep_pts, keep_w = [points[0]], [weights[0]]
    for p, w in zip(points[1:], weights[1:]):
        ref = keep_pts[-1]
        tol = ATOM_MERGE_TOL * (1.0 + np.linalg.norm(ref))
        if np.max(np.abs(p - ref)) < tol:
            keep_w[-1] = keep_w[-1] + w
        else:
            keep_pts.append(p)
            keep_w.append(w)
    return np.array(keep_pts), np.array(keep_w)


@dataclass(frozen=True)
class AtomicMeasure:
    """Nonnegative atomic measure on R^I, canonicalized on construction."""

    index_set: FiniteIndexSet
    points: np.ndarray = field(compare=False)
    weights: np.ndarray = field(compare=False)

    def __init__(self, index_set: FiniteIndexSet, atoms: Sequence[tuple[Sequence[float], float]] = (),
                 points: np.ndarray | None = None, weights: np.ndarray | None = None):
        if points is None:
            points = np.array([list(p) for p, _ in atoms], dtype=float).reshape(-1, index_set.dimension)
            weights = np.array([w for _, w in atoms], dtype=float)
        else:
            points = np.asarray(points, dtype=float).reshape(-1, index_set.dimension)
            weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0):
            raise ValueError("atom weights must be nonnegative")
        points, weights = _merge_atoms(points, weights)
        object.__setattr__(self, "index_set", index_set)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def origin_mass(self) -> float:
        if len(self.weights) == 0:
            return 0.0
        tol = ATOM_MERGE_TOL
        at_origin = np.max(np.abs(self.points), axis=1) < tol if self.points.size else np.zeros(0, bool)
        return float(np.sum(self.weights[at_origin]))

    def without_origin(self) -> "AtomicMeasure":
        if len(self.weights) == 0:
            return self
        keep = np.max(np.abs(self.points), axis=1) >= ATOM_MERGE_TOL
        return AtomicMeasure(self.index_set, points=self.points[keep], weights=self.weights[keep])

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Sum of f(point) * weight; f is vectorized over the atom array."""
        if len(self.weights) == 0:
            return 0.0
        vals = np.asarray(f(self.points), dtype=float)
        return float(np.dot(vals, self.weights))

    def approx_equal(self, other: "AtomicMeasure", weight_tol: float | None = None) -> bool:
        if self.index_set.labels != other.index_set.labels:
            return False
        if weight_tol is None:
            weight_tol = WEIGHT_TOL * max(self.total_mass, other.total_mass, 1.0)
        merged_pts, _ = _merge_atoms(
            np.vstack([self.points, other.points]) if self.points.size or other.points.size
            else np.zeros((0, self.index_set.dimension)),
            np.concatenate([np.zeros(len(self.weights)), np.zeros(len(other.weights))]),
        )

        def weight_at(m: AtomicMeasure, p: np.ndarray) -> float:
            if len(m.weights) == 0:
                return 0.0
            tol = ATOM_MERGE_TOL * (1.0 + np.linalg.norm(p))
            hit = np.max(np.abs(m.points - p), axis=1) < tol
            return float(np.sum(m.weights[hit]))

        return all(abs(weight_at(self, p) - weight_at(other, p)) <= weight_tol for p in merged_pts)

    def to_json(self) -> dict:
        return {
            "indexSet": list(self.index_set.labels),
            "atoms": [{"point": p.tolist(), "weight": float(w)} for p, w in zip(self.points, self.weights)],
        }

    @staticmethod
    def from_json(doc: Mapping) -> "AtomicMeasure":
        idx = FiniteIndexSet(doc["indexSet"])
        atoms = [(a["point"], a["weight"]) for a in doc["atoms"]]
        return AtomicMeasure(idx, atoms)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not converge within its subdivision cap."""


def _quad(f: Callable[[float], float], lo: float, hi: float) -> float:
    val, err, info, *msg = integrate.quad(f, lo, hi, epsrel=QUAD_REL_TOL, limit=QUAD_LIMIT,
                                          full_output=True)
    if msg:
        raise QuadratureError(str(msg[0]))
    return val


@dataclass(frozen=True)
class DensityLevyMeasure:
    """One-dimensional jump measure with a density, integrated by quadrature."""

    index_set: FiniteIndexSet
    density: Callable[[float], float]
    support: tuple[float, float]

    def __post_init__(self):
        if self.index_set.dimension != 1:
            raise ValueError("density-backed measures support one-dimensional index sets only")

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        lo, hi = self.support

        def g(x: float) -> float:
            return float(f(np.array([[x]]))[0]) * self.density(x)

        return _quad(g, lo, hi)


@dataclass(frozen=True)
class FiniteLevyStructure:
    """Generating triplet (covariance, jump measure, shift) on a finite index set."""

    sigma: np.ndarray
    levy: AtomicMeasure | DensityLevyMeasure
    shift: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        shift = np.asarray(self.shift, dtype=float)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "shift", shift)
        d = self.levy.index_set.dimension
        if sigma.shape != (d, d) or shift.shape != (d,):
            raise ValueError("sigma/shift dimensions do not match the index set")
        if not np.allclose(sigma, sigma.T, atol=1e-12, rtol=0):
            raise ValueError("sigma must be symmetric")
        eig = np.linalg.eigvalsh(sigma)
        scale = max(np.trace(sigma), 1.0)
        if np.min(eig) < -1e-10 * scale:
            raise ValueError("sigma must be nonnegative definite")


def validate_levy_measure(nu: AtomicMeasure) -> ValidationReport:
    """Check the square-integrability and no-origin-mass conditions.

    For finite atom lists the coordinate sums sum(w * (|x(t)|^2 min 1)) are
    always finite, so condition (a) only fails on overflow; condition (b)
    requires zero total weight at the origin point.
    """
    failures = []
    integrals = {}
    for i, lab in enumerate(nu.index_set.labels):
        col = nu.points[:, i] if nu.points.size else np.zeros(0)
        val = float(np.dot(np.minimum(col**2, 1.0), nu.weights))
        integrals[str(lab)] = val
        if not np.isfinite(val) or val > OVERFLOW_BOUND:
            failures.append(f"L1:{lab}")
    origin = nu.origin_mass()
    if origin != 0.0:
        failures.append("L2")
    return ValidationReport(passed=not failures, failures=tuple(failures),
                            coordinate_integrals=integrals, origin_mass=origin)


def project_measure(nu: AtomicMeasure, index_set: FiniteIndexSet,
                    drop_origin: bool = True) -> AtomicMeasure:
    """Pushforward under coordinate projection, restricted off the origin.

    With ``drop_origin`` false this is the raw pushforward, which for a
    consistent family can exceed the projected jump measure by a multiple
    of the origin delta.
    """
    cols = index_set.positions_in(nu.index_set)
    pushed = AtomicMeasure(index_set, points=nu.points[:, cols], weights=nu.weights)
    return pushed.without_origin() if drop_origin else pushed


def check_consistency(family: Mapping[FiniteIndexSet, AtomicMeasure]):
    """Verify projection-consistency of a family keyed by nested index sets.

    Returns (ok, violation) where violation is the first (I, J) pair whose
    projected measure disagrees with the stored one, or None.
    """
    keys = sorted(family.keys(), key=lambda s: (s.dimension, s.labels))
    for small in keys:
        for big in keys:
            if small is big or not small.is_subset_of(big):
                continue
            projected = project_measure(family[big], small)
            if not projected.approx_equal(family[small]):
                return False, (small, big)
    return True, None


def minimal_extension(nu: AtomicMeasure) -> AtomicMeasure:
    """Smallest measure agreeing with ``nu`` off the origin: drop origin mass."""
    return nu.without_origin()


def characteristic_exponent(triplet: FiniteLevyStructure, a: np.ndarray,
                            chi: CutoffFunction = INDICATOR_CUTOFF) -> complex:
    """Log characteristic function of the triplet at frequency vector ``a``.

    Gaussian part -<a, Sigma a>/2, jump part integral of
    exp(i<a,x>) - 1 - i<a, truncate(x)>, plus i<a, b>.
    """
    a = np.asarray(a, dtype=float)
    gauss = -0.5 * float(a @ triplet.sigma @ a)
    shift = 1j * float(a @ triplet.shift)

    def integrand(pts: np.ndarray) -> np.ndarray:
        phase = pts @ a
        trunc = truncate(pts, chi) @ a
        return np.exp(1j * phase) - 1.0 - 1j * trunc

    levy = triplet.levy
    if isinstance(levy, AtomicMeasure):
        if len(levy.weights) == 0:
            jump = 0.0 + 0.0j
        else:
            jump = complex(np.dot(integrand(levy.points), levy.weights))
    else:
        re = levy.integrate(lambda p: np.real(integrand(p)))
        im = levy.integrate(lambda p: np.imag(integrand(p)))
        jump = re + 1j * im
    return gauss + jump + shift


def sigma_finiteness_witness(rep, candidate_t0: Sequence, probes: int, seed=0,
                             threshold: float = 1e-3, confidence: float = 0.99) -> WitnessReport:
    """Monte-Carlo witness that the kernel does not vanish on all of T0.

    Draws ``probes`` points from the representation's sampling law and
    estimates the probability that V_t(s) = 0 for every t in T0, with an
    exact (Clopper-Pearson) upper confidence bound.  The result is a
    statistical witness, never a proof.
    """
    candidate_t0 = list(candidate_t0)
    if not candidate_t0:
        raise ValueError("candidate T0 must be nonempty")
    from .streams import substream  # local import: measures stays dependency-light

    rng = substream(seed, 0)
    hits = 0
    done = 0
    block = 65536
    while done < probes:
        n = min(block, probes - done)
        pts = rep.sample(rng, n)
        vanish = np.ones(n, dtype=bool)
        for t in candidate_t0:
            vanish &= np.asarray(rep.kernel(t, pts)) == 0.0
            if not vanish.any():
                break
        hits += int(np.sum(vanish))
        done += n
    est = hits / probes
    if hits == probes:
        upper = 1.0
    else:
        upper = float(stats.beta.ppf(confidence, hits + 1, probes - hits))
    return WitnessReport(estimate=est, ci_upper=upper, threshold=threshold,
                         probes=probes, hits=hits)
