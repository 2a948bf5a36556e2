import math

import numpy as np
import pytest

from sievesim.limitlaw import mittag_leffler_moment, z_moment, AlphaBeta
from sievesim.randkit import RngStream
from sievesim.stats import mc_accumulate
from sievesim.walks import (
    ConstantLaw,
    ExponentialLaw,
    LogDecayLaw,
    ParetoLaw,
    PrwLaw,
    WalkPath,
    busy_server_count,
    empty_box_functional,
    generate_path,
    weighted_window_statistic,
    renewal_function_estimate,
    renewal_count,
    renewal_shot_noise,
    tabulate_phi_log,
)

UNIT_STEP = PrwLaw.independent(ConstantLaw(1.0), ConstantLaw(0.0))


class TestMarginals:
    def test_pareto_tail_and_sampler(self):
        law = ParetoLaw(0.5)
        assert law.tail(0.5) == 1.0
        assert law.tail(4.0) == pytest.approx(0.5)
        draws = law.sample(RngStream(1, 0), size=100_000)
        assert np.all(draws >= 1.0)
        emp = (draws > 4.0).mean()
        assert emp == pytest.approx(0.5, abs=0.005)

    def test_exponential_tail(self):
        law = ExponentialLaw(2.0)
        assert law.tail(0.0) == 1.0
        assert law.tail(2.0) == pytest.approx(math.exp(-1.0))

    def test_constant_tail(self):
        law = ConstantLaw(3.0)
        assert law.tail(2.9) == 1.0
        assert law.tail(3.0) == 0.0

    def test_log_decay_tail_and_sampler(self):
        law = LogDecayLaw()
        assert law.tail(1.0) == 1.0
        assert law.tail(math.e) == pytest.approx(0.5)
        draws = law.sample(RngStream(2, 0), size=50_000)
        emp = (draws > math.e).mean()
        assert emp == pytest.approx(0.5, abs=0.01)

    def test_phi_log_quadrature_vs_monte_carlo(self):
        law = ParetoLaw(0.25)
        draws = law.sample(RngStream(3, 0), size=1_000_000)
        for w in (-2.0, 0.0, 2.0, 5.0):
            mc_vals = np.exp(-np.exp(np.minimum(w - draws, 50.0)))
            est = mc_accumulate(mc_vals)
            assert abs(law.phi_log(w) - est.mean) <= 4.0 * est.stderr

    def test_tabulated_phi_log_accuracy(self):
        law = ParetoLaw(0.25)
        interp = tabulate_phi_log(law, -5.0, 5.0, step=0.05)
        for w in np.linspace(-4.9, 4.9, 23):
            assert interp(float(w)) == pytest.approx(law.phi_log(float(w)), abs=1e-4)


class TestPrwLaw:
    def test_requires_exactly_one_eta_mode(self):
        with pytest.raises(ValueError):
            PrwLaw(xi_law=ParetoLaw(0.5))
        with pytest.raises(ValueError):
            PrwLaw(xi_law=ParetoLaw(0.5), eta_law=ConstantLaw(0.0), multiplier=1.0)

    def test_rejects_degenerate_xi(self):
        with pytest.raises(ValueError):
            PrwLaw.independent(ConstantLaw(0.0), ConstantLaw(1.0))

    def test_coupled_tails(self):
        law = PrwLaw.coupled(ParetoLaw(0.5), multiplier=2.0)
        assert law.eta_tail(8.0) == pytest.approx(float(np.asarray(ParetoLaw(0.5).tail(4.0))))
        xi, eta = law.sample_pairs(RngStream(4, 0), size=1000)
        assert np.allclose(eta, 2.0 * xi)


class TestPathAndRho:
    def test_unit_step_path(self):
        path = generate_path(UNIT_STEP, 10.0, RngStream(5, 0))
        assert np.array_equal(path.s_values[:5], [0.0, 1.0, 2.0, 3.0, 4.0])
        assert path.s_values[-1] > 10.0

    def test_zero_horizon(self):
        path = generate_path(UNIT_STEP, 0.0, RngStream(5, 1))
        assert np.array_equal(path.s_values, [0.0, 1.0])

    def test_rho_counts(self):
        path = generate_path(UNIT_STEP, 10.0, RngStream(5, 2))
        assert renewal_count(path, -0.5) == 0
        assert renewal_count(path, 0.0) == 1
        assert renewal_count(path, 2.5) == 3

    def test_rho_monotone_in_t(self):
        law = PrwLaw.independent(ParetoLaw(0.5), ConstantLaw(0.0))
        path = generate_path(law, 100.0, RngStream(6, 0))
        counts = [renewal_count(path, t) for t in np.linspace(0.0, 100.0, 23)]
        assert all(a <= b for a, b in zip(counts, counts[1:]))

    def test_rho_beyond_horizon(self):
        path = generate_path(UNIT_STEP, 5.0, RngStream(6, 1))
        with pytest.raises(ValueError):
            renewal_count(path, 6.0)

    def test_pareto_renewal_count_mean(self):
        # (1-F(t)) * renewal_count(t) has the Mittag-Leffler mean and second moment in
        # the large-t limit; tolerance 3 SE + 10% at t = 1e4
        law = PrwLaw.independent(ParetoLaw(0.5), ConstantLaw(0.0))
        t = 1e4
        rng = RngStream(7, 0).generator()
        scaled = np.array(
            [float(np.asarray(law.xi_tail(t))) * renewal_count(generate_path(law, t, rng), t)
             for _ in range(100_000)]
        )
        for order in (1, 2):
            est = mc_accumulate(scaled**order)
            target = mittag_leffler_moment(0.5, order)
            assert abs(est.mean - target) <= 3.0 * est.stderr + 0.10 * target


class TestRenewalFunction:
    def test_unit_step_exact(self):
        rows = renewal_function_estimate(UNIT_STEP, [0.5, 2.5, 7.9], 100, RngStream(8, 0))
        for (t, mean, se) in rows:
            assert mean == math.floor(t) + 1
            assert se == 0.0

    def test_poisson_process_renewal(self):
        law = PrwLaw.independent(ExponentialLaw(1.0), ConstantLaw(0.0))
        rows = renewal_function_estimate(law, [1.0, 10.0], 3000, RngStream(8, 1))
        for (t, mean, se) in rows:
            assert abs(mean - (t + 1.0)) <= 3.0 * se

    def test_monotone_estimates(self):
        law = PrwLaw.independent(ParetoLaw(0.5), ConstantLaw(0.0))
        rows = renewal_function_estimate(law, [1.0, 5.0, 25.0], 500, RngStream(8, 2))
        means = [m for _, m, _ in rows]
        assert means == sorted(means)

    def test_replicate_floor(self):
        with pytest.raises(ValueError):
            renewal_function_estimate(UNIT_STEP, [1.0], 50, RngStream(8, 3))


class TestFunctionalT:
    def test_zero_perturbation_vanishes(self):
        law = PrwLaw.independent(ParetoLaw(0.5), ConstantLaw(0.0))
        path = generate_path(law, 50.0, RngStream(9, 0))
        assert empty_box_functional(path, log_t=10.0) == 0.0

    def test_single_term_hand_check(self):
        eta1 = 2.0
        path = WalkPath(
            s_values=np.array([0.0, 1000.0]), eta_values=np.array([eta1]), horizon=50.0
        )
        t = 5.0
        expected = math.exp(-t * math.exp(-eta1)) - math.exp(-t)
        assert empty_box_functional(path, t=t) == pytest.approx(expected, rel=1e-12)

    def test_horizon_precondition(self):
        path = generate_path(UNIT_STEP, 5.0, RngStream(9, 1))
        with pytest.raises(ValueError):
            empty_box_functional(path, log_t=0.0, margin=40.0)

    def test_truncation_margin_insensitive(self):
        law = PrwLaw.independent(ParetoLaw(0.5), ParetoLaw(0.25))
        rng = RngStream(9, 2).generator()
        for _ in range(20):
            path = generate_path(law, 95.0, rng)
            a = empty_box_functional(path, log_t=15.0, margin=40.0)
            b = empty_box_functional(path, log_t=15.0, margin=80.0)
            assert abs(a - b) <= 1e-12


class TestFunctionalR:
    def test_zero_perturbation(self):
        law = PrwLaw.independent(ParetoLaw(0.5), ConstantLaw(0.0))
        path = generate_path(law, 100.0, RngStream(10, 0))
        assert busy_server_count(path, 50.0) == 0

    def test_everlasting_perturbation_equals_rho(self):
        law = PrwLaw.independent(ParetoLaw(0.5), ConstantLaw(1e9))
        path = generate_path(law, 100.0, RngStream(10, 1))
        assert busy_server_count(path, 50.0) == renewal_count(path, 50.0)

    def test_bounded_by_rho(self):
        law = PrwLaw.independent(ParetoLaw(0.5), ParetoLaw(0.25))
        rng = RngStream(10, 2).generator()
        for _ in range(50):
            path = generate_path(law, 200.0, rng)
            for t in (1.0, 30.0, 180.0):
                r = busy_server_count(path, t)
                assert 0 <= r <= renewal_count(path, t)


class TestShotNoise:
    def test_zero_perturbation_vanishes(self):
        law = PrwLaw.independent(ParetoLaw(0.5), ConstantLaw(0.0))
        path = generate_path(law, 60.0, RngStream(11, 0))
        v = renewal_shot_noise(path, log_t=15.0, phi_log=ConstantLaw(0.0).phi_log)
        assert v == pytest.approx(0.0, abs=1e-15)

    def test_constant_perturbation_hand_check(self):
        c = 1.5
        path = WalkPath(
            s_values=np.array([0.0, 1000.0]), eta_values=np.array([c]), horizon=60.0
        )
        t = 4.0
        expected = math.exp(-t * math.exp(-c)) - math.exp(-t)
        got = renewal_shot_noise(path, t=t, phi=lambda u: math.exp(-u * math.exp(-c)))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_variance_absorption(self):
        # the shot noise carries most of the empty-box functional's variance
        law = PrwLaw.independent(ParetoLaw(0.5), ParetoLaw(0.25))
        x = 100.0
        phi_log = tabulate_phi_log(law, -60.0, x + 5.0, step=0.05)
        rng = RngStream(11, 1).generator()
        t_vals, v_vals = np.empty(3000), np.empty(3000)
        for r in range(3000):
            path = generate_path(law, x + 40.0, rng)
            t_vals[r] = empty_box_functional(path, log_t=x)
            v_vals[r] = renewal_shot_noise(path, log_t=x, phi_log=phi_log)
        ratio = np.mean((t_vals - v_vals) ** 2) / np.var(t_vals)
        assert ratio < 0.5


class TestWindowStatistic:
    def test_flat_weight_reduces_to_renewal_count(self):
        law = PrwLaw.independent(ParetoLaw(0.5), ConstantLaw(0.0))
        path = generate_path(law, 100.0, RngStream(12, 0))
        t = 80.0
        got = weighted_window_statistic(path, t, lambda x: np.ones_like(np.asarray(x, dtype=float)),
                                   law.xi_tail)
        assert got == pytest.approx(float(np.asarray(law.xi_tail(t))) * renewal_count(path, t), rel=1e-12)

    def test_mean_near_limit(self):
        law = PrwLaw.independent(ParetoLaw(0.5), ConstantLaw(0.0))
        q_fn = lambda x: (1.0 + x) ** -0.25
        rng = RngStream(12, 1).generator()
        t = 1e3
        vals = np.array(
            [weighted_window_statistic(generate_path(law, t, rng), t, q_fn, law.xi_tail)
             for _ in range(20_000)]
        )
        target = z_moment(AlphaBeta(0.5, 0.25), 1)
        assert abs(vals.mean() - target) / target <= 0.15
