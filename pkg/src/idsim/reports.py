"""Report types shared by the verification operations.

Every check produces a small frozen dataclass that serializes to plain
JSON-compatible dicts; verdicts are recomputed properties, never cached
state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


@dataclass(frozen=True)
class IdentityReport:
    """Paired Monte-Carlo estimates of the two sides of an identity.

    ``z`` uses the independent-arm form (lhs-rhs)/sqrt(lhs_se^2+rhs_se^2)
    unless ``paired`` is set, in which case the arms shared randomness and
    z was computed from the per-replication differences.
    """

    name: str
    lhs_mean: float
    lhs_se: float
    rhs_mean: float
    rhs_se: float
    z: float
    reps: int
    z_crit: float = 4.0
    paired: bool = False
    lhs_trimmed: float = math.nan
    rhs_trimmed: float = math.nan
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return abs(self.z) < self.z_crit

    def to_dict(self) -> dict[str, Any]:
        d = {
            "name": self.name,
            "lhs_mean": self.lhs_mean,
            "lhs_se": self.lhs_se,
            "rhs_mean": self.rhs_mean,
            "rhs_se": self.rhs_se,
            "z": self.z,
            "reps": self.reps,
            "z_crit": self.z_crit,
            "paired": self.paired,
            "lhs_trimmed": self.lhs_trimmed,
            "rhs_trimmed": self.rhs_trimmed,
            "pass": self.passed,
        }
        if self.extra:
            d["extra"] = _jsonable(self.extra)
        return d


def combine_z(lhs_mean, lhs_se, rhs_mean, rhs_se) -> float:
    se = math.hypot(lhs_se, rhs_se)
    if se == 0.0:
        return 0.0 if lhs_mean == rhs_mean else math.inf
    return (lhs_mean - rhs_mean) / se


@dataclass(frozen=True)
class CfReport:
    """Empirical vs quadrature characteristic function on a theta grid."""

    thetas: np.ndarray
    empirical: np.ndarray
    oracle: np.ndarray
    z_scores: np.ndarray
    reps: int

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.empirical - self.oracle)))

    def passed(self, bound: float | None = None) -> bool:
        if bound is None:
            bound = 4.0 / math.sqrt(self.reps)
        return self.max_deviation < bound

    def to_dict(self) -> dict[str, Any]:
        return {
            "thetas": _jsonable(np.asarray(self.thetas)),
            "empirical": [_jsonable(complex(v)) for v in np.asarray(self.empirical)],
            "oracle": [_jsonable(complex(v)) for v in np.asarray(self.oracle)],
            "z_scores": _jsonable(np.asarray(self.z_scores)),
            "max_deviation": self.max_deviation,
            "reps": self.reps,
            "pass": self.passed(),
        }


@dataclass(frozen=True)
class WitnessReport:
    """Monte-Carlo witness for a measure-zero vanishing set."""

    estimate: float
    ci_upper: float
    threshold: float
    probes: int
    hits: int

    @property
    def witnessed(self) -> bool:
        return self.ci_upper < self.threshold

    def to_dict(self) -> dict[str, Any]:
        return {
            "estimate": self.estimate,
            "ci_upper": self.ci_upper,
            "threshold": self.threshold,
            "probes": self.probes,
            "hits": self.hits,
            "witnessed": self.witnessed,
        }


@dataclass(frozen=True)
class LimitReport:
    """Small-parameter limit estimates with Richardson extrapolation."""

    h_values: np.ndarray
    estimates: np.ndarray
    std_errors: np.ndarray
    extrapolated: float
    oracle: float
    reps_per_h: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {
            "h_values": _jsonable(np.asarray(self.h_values)),
            "estimates": _jsonable(np.asarray(self.estimates)),
            "std_errors": _jsonable(np.asarray(self.std_errors)),
            "extrapolated": self.extrapolated,
            "oracle": self.oracle,
            "reps_per_h": _jsonable(np.asarray(self.reps_per_h)),
        }


@dataclass(frozen=True)
class ValidationReport:
    """Result of checking the two defining conditions of a jump measure."""

    passed: bool
    failures: tuple[str, ...]
    coordinate_integrals: dict
    origin_mass: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "pass": self.passed,
            "failures": list(self.failures),
            "coordinate_integrals": _jsonable(self.coordinate_integrals),
            "origin_mass": self.origin_mass,
        }
