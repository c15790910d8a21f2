"""Paired Monte-Carlo verification of the translation/reweighting
identities."""

from .models import PoissonianProcessModel, QNormalizationError, check_q_normalization
from .translation import (
    AtomTranslationReport,
    SeriesIsoReport,
    verify_levy_translation,
    verify_series_iso,
    verify_translation,
    verify_translation_atom,
    verify_translation_converse,
)
from .dynkin import DynkinReport, verify_dynkin
from .sizebias import (
    SizeBiasModel,
    atomic_id_model,
    drift_only_model,
    gamma_vector_model,
    reconstructed_jump_measure,
    verify_size_bias,
)
from .smalltime import DEFAULT_H_LADDER, LevyMarginalModel, richardson_extrapolate, small_time_limit

__all__ = [name for name in dir() if not name.startswith("_")]
