"""Tests for excursion sampling and the occupation-density estimator."""

import math

import numpy as np
import pytest
from scipy import integrate

from idsim.representations import (
    ExcursionPoint,
    besq_kernel,
    canonical_tilt,
    excursion_length_tail,
    feller_kernel,
    local_time,
    sample_excursion,
    sample_tilted_length,
)
from idsim.representations.excursions import (
    excursion_tilt,
    local_time_profile,
    normalized_excursion,
    raw_length_density,
)
from idsim.streams import mean_se, substream


class TestTiltedLength:
    def test_tilted_density_normalizes(self):
        # Quadrature of the two analytic branches: x^(-1/2)/4 then x^(-3/2)/4.
        lo, _ = integrate.quad(lambda x: 0.25 * x**-0.5, 0, 1)
        hi, _ = integrate.quad(lambda x: 0.25 * x**-1.5, 1, np.inf)
        assert lo + hi == pytest.approx(1.0, abs=1e-10)
        assert lo == pytest.approx(0.5, abs=1e-10)

    def test_half_mass_below_one(self):
        rng = substream(0, 0)
        lengths = sample_tilted_length(canonical_tilt(), rng, 200_000)
        frac = np.mean(lengths <= 1.0)
        assert abs(frac - 0.5) < 4.0 * math.sqrt(0.25 / len(lengths))

    def test_untilted_tail_by_importance_reweighting(self):
        # Raw mass of {R > 1} recovered as E[1{R > 1} / f(R)] under the tilt.
        rng = substream(1, 0)
        tilt = canonical_tilt()
        lengths = sample_tilted_length(tilt, rng, 200_000)
        w = (lengths > 1.0) / tilt(lengths)
        m, se = mean_se(w)
        assert abs(m - excursion_length_tail(1.0)) < 4.0 * se
        assert excursion_length_tail(1.0) == pytest.approx(0.39894, abs=1e-5)

    def test_custom_tilt_rejection_matches_canonical(self):
        # f equal to the canonical tilt but passed as a custom callable.
        c = math.sqrt(math.pi / 2.0)
        tilt = excursion_tilt(lambda x: c * np.minimum(x, 1.0), ratio_bound=1.0)
        rng = substream(2, 0)
        lengths = sample_tilted_length(tilt, rng, 50_000)
        assert abs(np.mean(lengths <= 1.0) - 0.5) < 0.02

    def test_non_normalized_tilt_rejected(self):
        with pytest.raises(ValueError):
            excursion_tilt(lambda x: 2.0 * np.minimum(x, 1.0), ratio_bound=2.0)

    def test_inverse_cdf_branches(self):
        # CDF is sqrt(x)/2 below 1 and 1 - x^(-1/2)/2 above.
        rng = substream(3, 0)
        lengths = sample_tilted_length(canonical_tilt(), rng, 200_000)
        for x, cdf in [(0.25, 0.25), (4.0, 0.75)]:
            frac = np.mean(lengths <= x)
            assert abs(frac - cdf) < 4.0 * math.sqrt(cdf * (1 - cdf) / len(lengths))


class TestExcursionShape:
    def test_endpoints_zero_and_interior_positive(self):
        rng = substream(4, 0)
        for _ in range(20):
            exc = sample_excursion(canonical_tilt(), m=501, rng=rng)
            assert exc.path[0] == 0.0 and exc.path[-1] == 0.0
            assert np.all(exc.path[1:-1] > 0.0)

    def test_too_few_grid_points_rejected(self):
        with pytest.raises(ValueError):
            sample_excursion(canonical_tilt(), m=2, rng=substream(0, 0))

    def test_mean_area_of_normalized_shape(self):
        # E integral of the normalized excursion is sqrt(pi/8), consistent
        # with the mean occupation-density profile 4 a exp(-2 a^2).
        oracle = math.sqrt(math.pi / 8.0)
        rng = substream(5, 0)
        n, m = 4000, 2001
        areas = np.empty(n)
        for i in range(n):
            e = normalized_excursion(m, rng)
            areas[i] = np.trapezoid(e, dx=1.0 / (m - 1))
        m_, se = mean_se(areas)
        assert abs(m_ - oracle) < max(5.0 * se, 0.01)

    def test_mean_local_time_profile(self):
        # Independent oracle: mean occupation density of the unit excursion
        # at level a is 4 a exp(-2 a^2).
        rng = substream(6, 0)
        n, m = 3000, 2001
        levels = np.array([0.3, 0.6, 1.0])
        acc = np.zeros((n, len(levels)))
        for i in range(n):
            e = normalized_excursion(m, rng)
            exc = ExcursionPoint(length=1.0, path=e)
            acc[i] = local_time_profile(exc, levels, bandwidth=0.05, method="interp")
        oracle = 4.0 * levels * np.exp(-2.0 * levels**2)
        for j in range(len(levels)):
            m_, se = mean_se(acc[:, j])
            assert abs(m_ - oracle[j]) < max(5.0 * se, 0.03 * oracle[j])


def tent_excursion(m=2001):
    """Piecewise-linear tent of height 1 on [0, 2] with slopes +1 and -1."""
    t = np.linspace(0.0, 2.0, m)
    return ExcursionPoint(length=2.0, path=1.0 - np.abs(t - 1.0))


class TestLocalTime:
    def test_nonpositive_level_is_zero(self):
        exc = tent_excursion()
        assert local_time(exc, 0.0) == 0.0
        assert local_time(exc, -0.3) == 0.0

    def test_level_above_maximum_is_zero(self):
        exc = tent_excursion()
        assert local_time(exc, 1.2, bandwidth=0.05) == 0.0

    def test_tent_occupation_density(self):
        # Exact occupation density of the tent at level 1/2 is
        # 1/|slope up| + 1/|slope down| = 2.
        exc = tent_excursion(m=4001)
        val = local_time(exc, 0.5, bandwidth=0.01, method="interp")
        assert val == pytest.approx(2.0, rel=1e-9)
        val_grid = local_time(exc, 0.5, bandwidth=0.05, method="grid")
        assert val_grid == pytest.approx(2.0, rel=0.02)

    def test_interp_matches_grid_for_wide_bandwidth(self):
        rng = substream(7, 0)
        exc = sample_excursion(canonical_tilt(), m=5001, rng=rng)
        a = 0.4 * math.sqrt(exc.length)
        eps = exc.default_bandwidth()
        g = local_time(exc, a, bandwidth=eps, method="grid")
        i = local_time(exc, a, bandwidth=eps, method="interp")
        assert i == pytest.approx(g, rel=0.05, abs=0.05)

    def test_occupation_formula_integrates_to_length(self):
        # Trapezoid integral of the local-time profile over levels recovers
        # the excursion length within 2 percent.
        rng = substream(8, 0)
        rel_errors = []
        for _ in range(5):
            exc = sample_excursion(canonical_tilt(), m=10_000, rng=rng)
            eps = exc.default_bandwidth()
            top = float(exc.path.max()) + 2 * eps
            levels = np.linspace(eps / 4, top, 300)
            prof = local_time_profile(exc, levels, bandwidth=eps, method="grid")
            total = np.trapezoid(prof, levels)
            rel_errors.append(abs(total - exc.length) / exc.length)
        assert np.mean(rel_errors) < 0.02

    def test_scaling_consistency(self):
        # For the same normalized shape, the local time of the Brownian
        # rescaling at level a is sqrt(R) times the unit-length local time
        # at a / sqrt(R).
        rng = substream(9, 0)
        e = normalized_excursion(4001, rng)
        unit = ExcursionPoint(length=1.0, path=e)
        big = ExcursionPoint(length=4.0, path=2.0 * e)
        for a in (0.5, 0.9):
            lu = local_time(unit, a / 2.0, bandwidth=0.03, method="interp")
            lb = local_time(big, a, bandwidth=0.06, method="interp")
            assert lb == pytest.approx(2.0 * lu, rel=0.05, abs=0.02)


class TestKernels:
    def test_besq_kernel_zero_before_arrival(self):
        exc = tent_excursion()
        assert besq_kernel(t=1.0, r=1.5, exc=exc) == 0.0
        assert besq_kernel(t=1.0, r=1.0, exc=exc) == 0.0

    def test_feller_kernel_zero_at_time_zero(self):
        exc = tent_excursion()
        assert feller_kernel(t=0.0, exc=exc, sigma=1.0) == 0.0

    def test_feller_kernel_is_local_time_at_scaled_level(self):
        exc = tent_excursion(m=4001)
        sigma, t = 1.4, 1.0
        level = sigma * sigma * t / 4.0
        direct = local_time(exc, level, bandwidth=0.01, method="interp")
        viakernel = feller_kernel(t, exc, sigma, bandwidth=0.01, method="interp")
        assert viakernel == pytest.approx(direct)

    def test_besq_kernel_matches_shifted_level(self):
        exc = tent_excursion(m=4001)
        assert besq_kernel(1.0, 0.4, exc, bandwidth=0.01) == pytest.approx(
            local_time(exc, 0.6, bandwidth=0.01))
