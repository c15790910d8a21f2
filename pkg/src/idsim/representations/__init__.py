"""Concrete representation kernels and their samplers."""

from .kernels import (
    SamplePath,
    ScalarMeasure,
    compound_poisson_marginals,
    compound_poisson_sample,
    exponential_jump_law,
    levy_kernel,
    levy_strip_rep,
    poisson_jump_law,
    scalar_mark_rep,
    strip_points,
)
from .excursions import (
    ExcursionPoint,
    ExcursionTilt,
    besq_kernel,
    canonical_tilt,
    excursion_length_tail,
    feller_kernel,
    local_time,
    sample_excursion,
    sample_tilted_length,
)
from .markov import (
    MarkovChainModel,
    PermanentalModel,
    green_matrix,
    local_time_laplace_transform,
    sample_local_times_tilde,
    sample_permanental,
    sample_visit_counts,
)

__all__ = [name for name in dir() if not name.startswith("_")]
