"""Tests for the translation/reweighting identity verifiers."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from idsim.isomorphism import (
    LevyMarginalModel,
    PoissonianProcessModel,
    QNormalizationError,
    check_q_normalization,
    gamma_vector_model,
    atomic_id_model,
    drift_only_model,
    reconstructed_jump_measure,
    richardson_extrapolate,
    small_time_limit,
    verify_dynkin,
    verify_levy_translation,
    verify_series_iso,
    verify_size_bias,
    verify_translation,
    verify_translation_atom,
    verify_translation_converse,
)
from idsim.measures import AtomicMeasure, FiniteIndexSet
from idsim.representations import (
    MarkovChainModel,
    ScalarMeasure,
    levy_strip_rep,
    poisson_jump_law,
)
from idsim.series import levy_series_config
from idsim.streams import substream

HORIZON = 30.0


def poisson_model(rate=1.0, grid=(1.0,), horizon=HORIZON):
    rep = levy_strip_rep(poisson_jump_law(rate), horizon)
    return PoissonianProcessModel(rep=rep, grid=grid)


def exp_time_q(pts):
    return np.exp(-np.asarray(pts["r"], dtype=float))


def f_exp_neg_first(values):
    return np.exp(-values[:, 0])


def poisson_shift_oracle(lam=1.0):
    """Independent oracle for the unit-rate Poisson shift example:
    characteristic-functional closed form times one-dimensional quadrature
    over the shift time."""
    e_f_y = math.exp(lam * (math.exp(-1.0) - 1.0))
    shift_term, _ = integrate.quad(lambda r: math.exp(-(r <= 1.0)) * math.exp(-r), 0.0, 60.0,
                                   points=[1.0], limit=200)
    return e_f_y * shift_term


class TestPoissonShiftOracle:
    def test_quadrature_matches_closed_form(self):
        # exp(1/e - 1) * (1/e) * (2 - 1/e), derived by splitting the shift
        # expectation at time 1.
        e1 = math.exp(-1.0)
        closed = math.exp(e1 - 1.0) * e1 * (2.0 - e1)
        assert poisson_shift_oracle() == pytest.approx(closed, abs=1e-9)
        assert closed == pytest.approx(0.3191033, abs=5e-7)


class TestVerifyTranslation:
    def test_unit_functional(self):
        model = poisson_model()
        report = verify_translation(model, exp_time_q, lambda v: np.ones(len(v)),
                                    reps=30_000, seed=1)
        assert report.passed
        assert abs(report.rhs_mean - 1.0) < 4.0 * report.rhs_se
        # The self-normalized translated arm is exactly 1 for constant F.
        assert report.lhs_mean == pytest.approx(1.0)

    def test_poisson_shift_example(self):
        model = poisson_model()
        report = verify_translation(model, exp_time_q, f_exp_neg_first,
                                    reps=100_000, seed=2)
        oracle = poisson_shift_oracle()
        assert report.passed
        assert abs(report.lhs_mean - oracle) < 3.0 * report.lhs_se
        assert abs(report.rhs_mean - oracle) < 3.0 * report.rhs_se

    def test_negative_control_misscaled_q(self):
        model = poisson_model()
        bad_q = lambda pts: 1.5 * exp_time_q(pts)
        report = verify_translation(model, bad_q, f_exp_neg_first, reps=100_000,
                                    seed=3, check_normalization=False)
        assert abs(report.z) > 4.0
        with pytest.raises(QNormalizationError):
            check_q_normalization(model.rep, bad_q, seed=3)


class TestVerifyTranslationConverse:
    def test_positivity_probability(self):
        theta = 2.0
        rep = levy_strip_rep(poisson_jump_law(theta), 1.0)
        model = PoissonianProcessModel(rep=rep, grid=(1.0,))
        q = lambda pts: np.full(len(pts), 1.0 / theta)
        report = verify_translation_converse(model, q, lambda v: np.ones(len(v)),
                                             reps=50_000, seed=4)
        assert report.passed
        extra = report.extra
        assert extra["p_positive_oracle"] == pytest.approx(1.0 - math.exp(-theta))
        assert abs(extra["p_positive_z"]) < 4.0

    def test_unit_functional_consistency(self):
        model = poisson_model()
        report = verify_translation_converse(model, exp_time_q,
                                             lambda v: np.ones(len(v)),
                                             reps=50_000, seed=5)
        assert report.passed

    def test_exponential_functional(self):
        model = poisson_model()
        report = verify_translation_converse(model, exp_time_q, f_exp_neg_first,
                                             reps=50_000, seed=6)
        assert report.passed


class TestVerifyTranslationAtom:
    def test_pure_atom_is_trivial(self):
        model = poisson_model()
        rep = verify_translation_atom(model, lambda pts: np.zeros(len(pts)),
                                      atom_weight=1.0, functional=f_exp_neg_first,
                                      reps=20_000, seed=7, check_normalization=False)
        assert rep.direct.passed and rep.converse.passed

    def test_mixture_identity(self):
        model = poisson_model()
        q0 = 0.3
        q = lambda pts: (1.0 - q0) * exp_time_q(pts)
        rep = verify_translation_atom(model, q, atom_weight=q0,
                                      functional=f_exp_neg_first, reps=60_000, seed=8)
        assert rep.direct.passed and rep.converse.passed

    def test_negative_control_dropped_atom_term(self):
        model = poisson_model()
        q0 = 0.5
        q = lambda pts: (1.0 - q0) * exp_time_q(pts)
        rep = verify_translation_atom(model, q, atom_weight=q0,
                                      functional=f_exp_neg_first, reps=100_000, seed=9,
                                      rhs_atom_weight=0.0)
        assert abs(rep.direct.z) > 4.0

    def test_zero_set_choice_is_immaterial(self):
        model = poisson_model()
        q0 = 0.3
        q = lambda pts: (1.0 - q0) * exp_time_q(pts)
        kwargs = dict(atom_weight=q0, functional=f_exp_neg_first, reps=20_000, seed=10,
                      check_normalization=False)
        r1 = verify_translation_atom(model, q, zero_set_indicator=None, **kwargs)
        r2 = verify_translation_atom(
            model, q, zero_set_indicator=lambda pts: np.zeros(len(pts), dtype=bool),
            **kwargs)
        assert r1.converse.lhs_mean == r2.converse.lhs_mean
        assert r1.converse.rhs_mean == r2.converse.rhs_mean


class TestVerifyLevyTranslation:
    def test_poisson_exponential_shift(self):
        report = verify_levy_translation(poisson_jump_law(1.0), drift=0.0, q=exp_time_q,
                                         functional=f_exp_neg_first, horizon=HORIZON,
                                         grid=(1.0,), reps=100_000, seed=11)
        oracle = poisson_shift_oracle()
        assert report.passed
        assert abs(report.lhs_mean - oracle) < 3.0 * report.lhs_se
        assert abs(report.rhs_mean - oracle) < 3.0 * report.rhs_se

    def test_decoupled_weight_after_observation_window(self):
        # q supported on arrival times after t0: the translation does not
        # change the path on [0, t0], and the weight decouples from F.
        t0 = 1.0
        lam = 1.0

        def q(pts):
            r = np.asarray(pts["r"], dtype=float)
            return np.where(r > t0, np.exp(-(r - t0)), 0.0)

        report = verify_levy_translation(poisson_jump_law(lam), drift=0.0, q=q,
                                         functional=f_exp_neg_first, horizon=HORIZON,
                                         grid=(t0,), reps=60_000, seed=12)
        assert report.passed
        closed = math.exp(lam * t0 * (math.exp(-1.0) - 1.0))
        assert abs(report.lhs_mean - closed) < 4.0 * report.lhs_se

    def test_drift_only_degenerate(self):
        # Zero-size jumps: both sides reduce to F of the drift path.
        law = ScalarMeasure.from_atoms([(0.0, 1.0)])
        drift = 0.7
        report = verify_levy_translation(law, drift=drift, q=exp_time_q,
                                         functional=f_exp_neg_first, horizon=HORIZON,
                                         grid=(1.0,), reps=20_000, seed=13)
        target = math.exp(-drift * 1.0)
        assert report.passed
        assert abs(report.lhs_mean - target) < 4.0 * max(report.lhs_se, 1e-12)
        assert abs(report.rhs_mean - target) < 4.0 * max(report.rhs_se, 1e-12)


class TestSmallTimeLimit:
    def test_poisson_tail_limit(self):
        lam = 2.0
        model = LevyMarginalModel(jump_law=poisson_jump_law(lam))
        report = small_time_limit(model, lambda x: (x >= 1.0).astype(float),
                                  reps=40_000, seed=14)
        assert report.oracle == pytest.approx(lam)
        assert abs(report.extrapolated - lam) / lam < 0.05

    def test_compound_poisson_set_mass(self):
        # Jump law 0.8 delta_1 + 0.7 delta_3; B = [2, inf) has mass 0.7.
        law = ScalarMeasure.from_atoms([(1.0, 0.8), (3.0, 0.7)])
        model = LevyMarginalModel(jump_law=law)
        f = lambda x: (x >= 2.0).astype(float)
        report = small_time_limit(model, f, reps=40_000, seed=15)
        assert report.oracle == pytest.approx(0.7)
        assert abs(report.extrapolated - 0.7) / 0.7 < 0.05

    def test_brownian_negative_case(self):
        model = LevyMarginalModel(jump_law=None, sigma=1.0)
        f = lambda x: np.minimum(np.abs(x) ** 3, 1.0)
        report = small_time_limit(model, f, reps=40_000, seed=16,
                                  h_ladder=(1e-2, 1e-3, 1e-4, 1e-5))
        assert report.oracle == 0.0
        assert abs(report.extrapolated) < 0.01

    def test_richardson_removes_linear_error(self):
        h = np.array([1e-2, 1e-3])
        est = 2.0 + 5.0 * h
        assert richardson_extrapolate(h, est) == pytest.approx(2.0, abs=1e-9)


def two_state_chain(p=0.4):
    return MarkovChainModel(["a", "b"], [[0.0, p], [p, 0.0]])


class TestVerifyDynkin:
    def test_unit_functional_mean_identity(self):
        report = verify_dynkin(two_state_chain(), "a", alpha=0.5,
                               functional=lambda v: np.ones(len(v)), reps=50_000, seed=17)
        assert abs(report.direct.rhs_mean - 1.0) < 4.0 * report.direct.rhs_se
        assert report.direct.passed

    def test_two_state_exponential_functional(self):
        chain = two_state_chain(0.4)
        U = chain.green
        report = verify_dynkin(chain, "a", alpha=0.5,
                               functional=lambda v: np.exp(-v[:, 1]), reps=100_000, seed=18)
        assert report.direct.passed and report.converse.passed
        # Analytic value of both sides (determinant calculus).
        analytic = (1.0 + U[1, 1]) ** -0.5 * (1.0 - U[0, 1] ** 2 / (U[0, 0] * (1.0 + U[1, 1])))
        assert abs(report.direct.lhs_mean - analytic) < 4.0 * report.direct.lhs_se
        assert abs(report.direct.rhs_mean - analytic) < 4.0 * report.direct.rhs_se

    def test_single_state_reduces_to_gamma_size_bias(self):
        # One state with survival 1/2: potential u = 2; the translated sum
        # Gamma(alpha, u) + Exp(u) is the size-biased Gamma(alpha + 1, u).
        chain = MarkovChainModel(["a"], [[0.5]])
        u = chain.green[0, 0]
        alpha = 0.5
        from idsim.representations import sample_local_times_tilde, sample_permanental
        from idsim.representations.markov import PermanentalModel

        rng = substream(19, 0)
        n = 10_000
        y = sample_permanental(PermanentalModel(green=chain.green, alpha=alpha), rng, n)[:, 0]
        lt = sample_local_times_tilde(chain, "a", rng, n)[:, 0]
        ks = stats.kstest(y + lt, "gamma", args=(alpha + 1.0, 0.0, u)).statistic
        assert ks < 0.02
        report = verify_dynkin(chain, "a", alpha=alpha,
                               functional=lambda v: np.exp(-v[:, 0]), reps=50_000, seed=20)
        assert report.direct.passed and report.converse.passed

    def test_wrong_anchor_scale_detected(self):
        # Misscaling the anchor weight is the documented negative control.
        chain = two_state_chain(0.4)
        from idsim.isomorphism.dynkin import PermanentalModel, sample_local_times_tilde, \
            sample_permanental
        from idsim.isomorphism.models import two_arm_report
        from idsim.streams import replicate

        model = PermanentalModel(green=chain.green, alpha=0.5, states=chain.states)
        scale_bad = 0.5 * chain.green[0, 0] * 1.3

        def lhs(rng, n):
            y = sample_permanental(model, rng, n)
            lt = sample_local_times_tilde(chain, "a", rng, n)
            return np.exp(-(y + lt)[:, 1])

        def rhs(rng, n):
            y = sample_permanental(model, rng, n)
            return np.exp(-y[:, 1]) * y[:, 0] / scale_bad

        report = two_arm_report("bad", replicate(100_000, 21, lhs, 0),
                                replicate(100_000, 21, rhs, 1))
        assert abs(report.z) > 4.0


class TestVerifySizeBias:
    def test_gamma_translation_law(self):
        # Size-biased Gamma(alpha, 1) equals Gamma(alpha + 1, 1).
        model = gamma_vector_model([0.7])
        rng = substream(22, 0)
        y = model.sample_y(rng, 10_000)
        z = model.sample_translation(rng, 10_000, 0)
        ks = stats.kstest((y + z)[:, 0], "gamma", args=(1.7, 0.0, 1.0))
        assert ks.pvalue > 1e-3

    def test_gamma_identity(self):
        model = gamma_vector_model([0.7])
        report = verify_size_bias(model, 0, lambda v: np.exp(-v[:, 0]), reps=60_000, seed=23)
        assert report.passed

    def test_two_dim_gamma_identity(self):
        model = gamma_vector_model([0.5, 1.5])
        f = lambda v: np.exp(-0.7 * v[:, 0] - 0.4 * v[:, 1])
        for k in (0, 1):
            report = verify_size_bias(model, k, f, reps=60_000, seed=24 + k)
            assert report.passed

    def test_drift_only(self):
        model = drift_only_model([2.0, 1.0])
        f = lambda v: np.exp(-v[:, 0] - v[:, 1])
        report = verify_size_bias(model, 0, f, reps=2_000, seed=26)
        target = math.exp(-3.0)
        assert report.lhs_mean == pytest.approx(target)
        assert report.rhs_mean == pytest.approx(target)

    def test_unit_functional(self):
        model = gamma_vector_model([1.2], drifts=[0.5])
        report = verify_size_bias(model, 0, lambda v: np.ones(len(v)), reps=30_000, seed=27)
        assert abs(report.rhs_mean - 1.0) < 4.0 * report.rhs_se
        assert report.passed

    def test_atomic_model_identity(self):
        nu = AtomicMeasure(FiniteIndexSet(["x", "y"]),
                           [((1.0, 0.0), 0.5), ((0.5, 2.0), 0.8), ((0.0, 1.0), 0.4)])
        model = atomic_id_model([0.2, 0.0], nu)
        f = lambda v: 1.0 / (1.0 + v[:, 0] + 0.5 * v[:, 1])
        for k in (0, 1):
            report = verify_size_bias(model, k, f, reps=60_000, seed=28 + k)
            assert report.passed

    def test_reconstruction_of_jump_measure(self):
        # For Gamma(alpha, 1): integral of y^2 against the jump measure
        # alpha y^(-1) exp(-y) dy equals alpha.
        alpha = 1.3
        model = gamma_vector_model([alpha])
        val = reconstructed_jump_measure(model, lambda z: z[:, 0] ** 2, k=0, seed=30)
        assert val == pytest.approx(alpha, rel=0.02)

    def test_drift_reconstruction(self):
        # theta_k P(Z_k = 0) recovers the drift coordinate.
        c, alpha = 0.5, 1.0
        model = gamma_vector_model([alpha], drifts=[c])
        rng = substream(31, 0)
        z = model.sample_translation(rng, 200_000, 0)
        p0 = float(np.mean(z[:, 0] == 0.0))
        assert model.theta(0) * p0 == pytest.approx(c, rel=0.03)


class TestVerifySeriesIso:
    def setup_method(self):
        law = ScalarMeasure.from_atoms([(1.0, 0.7), (-1.0, 0.3)])
        self.cfg = levy_series_config(law, 0.0, 2.0, (0.5, 1.0))

    def test_q_equal_g_unit_weight(self):
        theta = self.cfg.rep.finite_mass
        q = lambda pts: np.full(len(pts), 1.0 / theta)
        report = verify_series_iso(self.cfg, q, lambda v: np.ones(len(v)),
                                   reps=30_000, seed=32)
        assert abs(report.direct.rhs_mean - 1.0) < 4.0 * report.direct.rhs_se
        assert report.direct.passed and report.converse.passed

    def test_time_weighted_q(self):
        horizon = 1.0

        def q(pts):
            r = np.asarray(pts["r"], dtype=float)
            return 2.0 * r / horizon / self.cfg.rep.finite_mass

        report = verify_series_iso(self.cfg, q, lambda v: np.exp(-v[:, 1]),
                                   reps=60_000, seed=33)
        assert report.direct.passed and report.converse.passed

    def test_agrees_with_direct_translation_verifier(self):
        # Same model, same q: the series-form report and the stochastic
        # integral report estimate the same identity.
        from idsim.series import centering_term

        theta = self.cfg.rep.finite_mass
        q = lambda pts: np.full(len(pts), 1.0 / theta)
        f = lambda v: np.exp(-v[:, 1])
        series_rep = verify_series_iso(self.cfg, q, f, reps=60_000, seed=34)

        # Match the series path's deterministic part: shift minus the summed
        # per-term compensators.
        def net_offset(t):
            total = sum(centering_term(self.cfg, j, t)
                        for j in range(1, self.cfg.centering_support + 1))
            return self.cfg.shift(t) - total

        model = PoissonianProcessModel(rep=self.cfg.rep, grid=self.cfg.time_grid,
                                       deterministic=net_offset)
        direct = verify_translation(model, q, f, reps=60_000, seed=35)
        assert series_rep.direct.passed and direct.passed
        diff = series_rep.direct.lhs_mean - direct.lhs_mean
        se = math.hypot(series_rep.direct.lhs_se, direct.lhs_se)
        assert abs(diff) < 4.0 * se

    def test_budget_below_mass_rejected(self):
        law = ScalarMeasure.from_atoms([(1.0, 3.0)])
        cfg = levy_series_config(law, 0.0, 1.0, (1.0,))
        q = lambda pts: np.full(len(pts), 1.0 / 3.0)
        with pytest.raises(ValueError):
            verify_series_iso(cfg, q, lambda v: np.ones(len(v)), reps=100, seed=36)
