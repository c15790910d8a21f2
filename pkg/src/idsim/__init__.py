"""idsim: simulation and statistical verification of infinitely divisible
processes built from representations of their jump measures."""

__version__ = "0.1.0"

from .measures import (
    AtomicMeasure,
    CutoffFunction,
    CutoffKind,
    DensityLevyMeasure,
    FiniteIndexSet,
    FiniteLevyStructure,
    INDICATOR_CUTOFF,
    INVERSE_MAX_CUTOFF,
    INVERSE_QUADRATIC_CUTOFF,
    characteristic_exponent,
    check_consistency,
    minimal_extension,
    project_measure,
    sigma_finiteness_witness,
    truncate,
    validate_levy_measure,
)
from .prm import (
    LevyRepresentation,
    PointConfiguration,
    compensated_integral,
    empirical_cf_check,
    gamma_ladder,
    mecke_palm_check,
    n_of_q,
    sample_prm_finite,
    sample_prm_thinned,
)
from .reports import CfReport, IdentityReport, LimitReport, ValidationReport, WitnessReport

__all__ = [name for name in dir() if not name.startswith("_")]
