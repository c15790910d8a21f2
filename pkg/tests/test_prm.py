"""Tests for Poisson-random-measure sampling and compensated integrals."""

import math

import numpy as np
import pytest

from idsim.measures import INDICATOR_CUTOFF
from idsim.prm import (
    LevyRepresentation,
    PointConfiguration,
    compensated_integral,
    empirical_cf_check,
    gamma_ladder,
    mecke_palm_check,
    n_of_q,
    sample_counts_and_points,
    sample_prm_finite,
    sample_prm_thinned,
)
from idsim.representations import poisson_jump_law, scalar_mark_rep, ScalarMeasure
from idsim.streams import mean_se, replicate, substream


def poisson_rep(theta=1.0):
    return scalar_mark_rep(ScalarMeasure.from_atoms([(1.0, theta)]))


def poisson_pmf(k, lam):
    return math.exp(-lam) * lam**k / math.factorial(k)


class TestFiniteSampler:
    def test_zero_mass_always_empty(self):
        law = ScalarMeasure.from_atoms([(1.0, 1e-12)])
        rep = scalar_mark_rep(law)
        rng = substream(0, 0)
        assert all(len(sample_prm_finite(rep, rng)) == 0 for _ in range(50))

    def test_count_statistics_theta_4(self):
        theta, reps = 4.0, 100_000
        rep = poisson_rep(theta)

        def worker(rng, n):
            counts, _, _ = sample_counts_and_points(rep, rng, n)
            return counts.astype(float)

        counts = replicate(reps, 42, worker)
        assert abs(counts.mean() - theta) < 4.0 * math.sqrt(theta / reps)

    def test_fixed_seed_replays(self):
        rep = poisson_rep(3.0)
        a = sample_prm_finite(rep, substream(9, 1))
        b = sample_prm_finite(rep, substream(9, 1))
        np.testing.assert_array_equal(a.points, b.points)

    def test_missing_mass_rejected(self):
        rep = LevyRepresentation(sample=lambda rng, n: np.zeros(n),
                                 g=lambda p: np.ones(len(p)),
                                 kernel=lambda t, p: np.zeros(len(p)))
        with pytest.raises(ValueError):
            sample_prm_finite(rep, substream(0, 0))


class TestThinnedSampler:
    def test_zero_budget_empty(self):
        cfg = sample_prm_thinned(poisson_rep(2.0), 0.0, substream(0, 0))
        assert len(cfg) == 0

    @pytest.mark.parametrize("theta,tau", [(2.0, 5.0), (2.0, 1.0)])
    def test_retained_count_oracle(self, theta, tau):
        # Counting oracle on the strip: expected retained points equal
        # integral of (tau g min 1) dn = min(tau, theta) for constant g.
        rep = poisson_rep(theta)
        reps = 100_000

        def worker(rng, n):
            return np.array([len(sample_prm_thinned(rep, tau, rng)) for _ in range(n)],
                            dtype=float)

        counts = replicate(reps, 7, worker)
        expected = min(tau, theta)
        m, se = mean_se(counts)
        assert abs(m - expected) < 4.0 * se

    def test_ladder_prefix_property(self):
        g1 = gamma_ladder(substream(5, 0), 3.0)
        g2 = gamma_ladder(substream(5, 0), 8.0)
        assert len(g2) >= len(g1)
        np.testing.assert_allclose(g2[: len(g1)], g1)

    def test_marks_are_increasing(self):
        cfg = sample_prm_thinned(poisson_rep(4.0), 10.0, substream(1, 0))
        assert np.all(np.diff(cfg.marks) > 0)


class TestCompensatedIntegral:
    def test_zero_function(self):
        cfg = PointConfiguration(points=np.array([1.0, 2.0]))
        assert compensated_integral(cfg, lambda p: np.zeros(len(p))) == 0.0

    def test_large_value_indicator_cutoff(self):
        # f = a 1_A with |a| > 1: the compensator integrand f chi(f) vanishes.
        rep = poisson_rep(2.0)
        a = 3.5
        f = lambda pts: a * (np.asarray(pts) == 1.0)
        comp = rep.intensity_integral(lambda p: np.asarray(f(p)) * INDICATOR_CUTOFF(np.abs(f(p))))
        assert comp == pytest.approx(0.0, abs=1e-12)
        cfg = sample_prm_finite(rep, substream(3, 0))
        val = compensated_integral(cfg, f, compensator_value=comp)
        assert val == pytest.approx(a * len(cfg))

    def test_moment_bound(self):
        # E(|I_N(f)| min 1) <= 2 sqrt(integral |f|^2 min 1 dn), within noise.
        theta = 1.0
        rep = poisson_rep(theta)
        f = lambda pts: 0.6 * np.asarray(pts, dtype=float)
        comp = rep.intensity_integral(lambda p: np.asarray(f(p)) * INDICATOR_CUTOFF(np.abs(f(p))))
        reps = 100_000

        def worker(rng, n):
            counts, flat, idx = sample_counts_and_points(rep, rng, n)
            sums = np.bincount(idx, weights=np.asarray(f(flat)), minlength=n)
            return np.minimum(np.abs(sums - comp), 1.0)

        vals = replicate(reps, 13, worker)
        bound = 2.0 * math.sqrt(rep.intensity_integral(
            lambda p: np.minimum(np.asarray(f(p)) ** 2, 1.0)))
        m, se = mean_se(vals)
        assert m <= bound + 3.0 * se

    def test_linearity_on_disjoint_simple_functions(self):
        pts = np.array([1.0, 1.0, 2.0, 5.0])
        cfg = PointConfiguration(points=pts)
        f1 = lambda p: 3.0 * (np.asarray(p) == 1.0)
        f2 = lambda p: -2.5 * (np.asarray(p) == 5.0)
        both = lambda p: f1(p) + f2(p)
        v1 = compensated_integral(cfg, f1, compensator_value=0.0)
        v2 = compensated_integral(cfg, f2, compensator_value=0.0)
        v12 = compensated_integral(cfg, both, compensator_value=0.0)
        assert v12 == pytest.approx(v1 + v2)

    def test_nonfinite_compensator_rejected(self):
        cfg = PointConfiguration(points=np.array([1.0]))
        with pytest.raises(ValueError):
            compensated_integral(cfg, lambda p: np.ones(len(p)),
                                 compensator_value=math.inf)


class TestNofQ:
    def test_empty_config(self):
        assert n_of_q(PointConfiguration(points=np.zeros(0)), lambda p: p) == 0.0

    def test_unit_mean_when_q_normalized(self):
        theta = 2.0
        rep = poisson_rep(theta)
        q = lambda pts: np.full(len(pts), 1.0 / theta)
        reps = 100_000

        def worker(rng, n):
            counts, flat, idx = sample_counts_and_points(rep, rng, n)
            return np.bincount(idx, weights=np.asarray(q(flat)), minlength=n)

        vals = replicate(reps, 21, worker)
        m, se = mean_se(vals)
        assert abs(m - 1.0) < 4.0 * se

    def test_constant_q_counts(self):
        cfg = PointConfiguration(points=np.ones(7))
        assert n_of_q(cfg, lambda p: np.full(len(p), 2.5)) == pytest.approx(7 * 2.5)

    def test_additive_over_splits(self):
        rng = substream(2, 0)
        pts = rng.uniform(size=30)
        q = lambda p: np.asarray(p) ** 2
        left = PointConfiguration(points=pts[:11])
        right = PointConfiguration(points=pts[11:])
        assert n_of_q(left.merge(right), q) == pytest.approx(n_of_q(left, q) + n_of_q(right, q))


class TestEmpiricalCf:
    def test_theta_zero_exact(self):
        rep = poisson_rep(1.0)
        report = empirical_cf_check(rep, lambda p: np.asarray(p, dtype=float),
                                    INDICATOR_CUTOFF, [0.0], reps=200, seed=0)
        assert report.empirical[0] == pytest.approx(1.0)
        assert report.oracle[0] == pytest.approx(1.0)

    def test_poisson_identity_mark(self):
        # Closed-form oracle: exp(exp(i t) - 1 - i t) for the compensated
        # Poisson(1) integral of the identity mark.
        rep = poisson_rep(1.0)
        thetas = np.linspace(-3, 3, 7)
        reps = 100_000
        report = empirical_cf_check(rep, lambda p: np.asarray(p, dtype=float),
                                    INDICATOR_CUTOFF, thetas, reps=reps, seed=5)
        closed = np.exp(np.exp(1j * thetas) - 1.0 - 1j * thetas)
        np.testing.assert_allclose(report.oracle, closed, atol=1e-9)
        assert report.max_deviation < 4.0 / math.sqrt(reps)

    def test_zero_function_exact_one(self):
        rep = poisson_rep(1.0)
        report = empirical_cf_check(rep, lambda p: np.zeros(len(p)), INDICATOR_CUTOFF,
                                    [0.5, 1.0, 2.0], reps=100, seed=0)
        np.testing.assert_allclose(report.empirical, 1.0)
        np.testing.assert_allclose(report.oracle, 1.0)


class TestMeckePalm:
    def test_zero_h(self):
        rep = poisson_rep(1.5)
        report = mecke_palm_check(rep, lambda s, cfg: 0.0, reps=500, seed=0)
        assert report.lhs_mean == 0.0 and report.rhs_mean == 0.0

    def test_constant_h_gives_total_mass(self):
        theta = 2.5
        rep = poisson_rep(theta)
        report = mecke_palm_check(rep, lambda s, cfg: 1.0, reps=50_000, seed=3)
        assert abs(report.lhs_mean - theta) < 5.0 * report.lhs_se
        # Constant h and constant g make the right arm exact.
        assert report.rhs_mean == pytest.approx(theta, abs=1e-12)
        assert report.passed

    def test_exponential_count_weight_vs_bruteforce(self):
        # Brute-force oracle over the truncated Poisson count distribution.
        theta = 2.0
        rep = poisson_rep(theta)
        h = lambda s, cfg: math.exp(-len(cfg))
        lhs_oracle = sum(k * math.exp(-k) * poisson_pmf(k, theta) for k in range(51))
        rhs_oracle = theta * sum(math.exp(-(k + 1)) * poisson_pmf(k, theta) for k in range(51))
        assert lhs_oracle == pytest.approx(rhs_oracle, rel=1e-12)
        report = mecke_palm_check(rep, h, reps=100_000, seed=17)
        assert report.passed
        assert abs(report.lhs_mean - lhs_oracle) < 4.0 * report.lhs_se
        assert abs(report.rhs_mean - rhs_oracle) < 4.0 * report.rhs_se


class TestSuperposition:
    def test_merged_configurations_match_sum_intensity(self):
        # Counts of merged independent configurations vs the summed-mass
        # sampler: compare first two moments and the cf of N(q).
        t1, t2 = 1.0, 2.5
        rep1, rep2, rep12 = poisson_rep(t1), poisson_rep(t2), poisson_rep(t1 + t2)
        reps = 60_000

        def merged(rng, n):
            c1, _, _ = sample_counts_and_points(rep1, rng, n)
            c2, _, _ = sample_counts_and_points(rep2, rng, n)
            return (c1 + c2).astype(float)

        def direct(rng, n):
            c, _, _ = sample_counts_and_points(rep12, rng, n)
            return c.astype(float)

        a = replicate(reps, 31, merged, lane=0)
        b = replicate(reps, 31, direct, lane=1)
        ma, sa = mean_se(a)
        mb, sb = mean_se(b)
        assert abs(ma - mb) < 4.0 * math.hypot(sa, sb)
        va, vb = a.var(ddof=1), b.var(ddof=1)
        assert abs(va - vb) / vb < 0.05
        for theta in (0.5, 1.0):
            ca, cb = np.exp(1j * theta * a), np.exp(1j * theta * b)
            dev = abs(ca.mean() - cb.mean())
            assert dev < 6.0 / math.sqrt(reps)


class TestDeterminism:
    def test_worker_count_does_not_change_results(self, monkeypatch):
        rep = poisson_rep(2.0)

        def run():
            return empirical_cf_check(rep, lambda p: np.asarray(p, dtype=float),
                                      INDICATOR_CUTOFF, [1.0], reps=40_000, seed=9)

        monkeypatch.setenv("IDSIM_THREADS", "1")
        r1 = run()
        monkeypatch.setenv("IDSIM_THREADS", "4")
        r4 = run()
        assert complex(r1.empirical[0]) == complex(r4.empirical[0])
