import json
import math

import numpy as np
import pytest

from sievesim.chains import (
    ChainSpec,
    Pmf,
    barrier_chain_spec,
    chain_from_json,
    chain_to_json,
    empirical_pmf,
    exact_zero_decrement_pmf,
    geometric_pmf,
    geometric_rep_sampler,
    mixed_poisson_diagnostic,
    sample_geometric_rep,
    sample_zero_decrements,
    sieve_chain_spec,
    simulate_zero_decrements,
)
from sievesim.randkit import RngStream
from sievesim.sieve import BetaW, ConstantW, LogParetoMixtureW, UniformW
from sievesim.stats import tv_distance


def geometric_target(width):
    return 2.0 ** -(np.arange(width) + 1.0)


class TestPmf:
    def test_validation(self):
        Pmf(masses=np.array([0.5, 0.5]))
        Pmf(masses=np.array([0.5, 0.25]), tail_deficit=0.25)
        with pytest.raises(ValueError):
            Pmf(masses=np.array([0.5, -0.1, 0.6]))
        with pytest.raises(ValueError):
            Pmf(masses=np.array([0.5, 0.3]))

    def test_empirical(self):
        pmf = empirical_pmf([0, 0, 1, 3])
        assert np.allclose(pmf.masses, [0.5, 0.25, 0.0, 0.25])
        assert pmf.tail_deficit == 0.0

    def test_geometric_with_deficit(self):
        pmf = geometric_pmf(0.5, 10)
        assert pmf.masses[0] == 0.5
        assert pmf.tail_deficit == pytest.approx(2.0**-10)


class TestChainSpec:
    def test_row_length_and_sum_checks(self):
        with pytest.raises(ValueError):
            ChainSpec(floor=0, rows={1: np.array([0.5, 0.25])})
        with pytest.raises(ValueError):
            ChainSpec(floor=0, rows={1: np.array([0.3, 0.3])})
        with pytest.raises(ValueError):
            ChainSpec(floor=0, rows={2: np.array([1.0, 0.0, 0.0])})  # s_(2,1) = 0

    def test_missing_row_detected(self):
        spec = ChainSpec(floor=0, rows={1: np.array([0.5, 0.5])})
        with pytest.raises(ValueError):
            exact_zero_decrement_pmf(spec, 2)

    def test_row_access(self):
        spec = sieve_chain_spec(UniformW(), 5)
        assert np.allclose(spec.row(3), 0.25)
        assert spec.stay_prob(4) == pytest.approx(0.2)


class TestExactDp:
    def test_floor_start_is_point_mass(self):
        spec = sieve_chain_spec(UniformW(), 5)
        pmf = exact_zero_decrement_pmf(spec, 0)
        assert pmf.masses.tolist() == [1.0]

    def test_uniform_sieve_geometric(self):
        spec = sieve_chain_spec(UniformW(), 25)
        for n in (1, 2, 9, 25):
            pmf = exact_zero_decrement_pmf(spec, n, deficit_cap=1e-12)
            target = geometric_target(pmf.masses.size)
            assert np.abs(pmf.masses - target).max() <= 1e-10

    def test_constant_half_sieve_geometric(self):
        spec = sieve_chain_spec(ConstantW(0.5), 20)
        pmf = exact_zero_decrement_pmf(spec, 20)
        assert np.abs(pmf.masses - geometric_target(pmf.masses.size)).max() <= 1e-10

    def test_dyadic_barrier_geometric(self):
        p = 2.0 ** -np.arange(1, 61, dtype=float)
        spec = barrier_chain_spec(p, 60)
        for n in (2, 17, 60):
            pmf = exact_zero_decrement_pmf(spec, n)
            assert np.abs(pmf.masses - geometric_target(pmf.masses.size)).max() <= 1e-10

    def test_mass_conservation(self):
        spec = sieve_chain_spec(BetaW(2, 3), 40)
        pmf = exact_zero_decrement_pmf(spec, 40, deficit_cap=1e-10)
        assert pmf.masses.sum() + pmf.tail_deficit == pytest.approx(1.0, abs=1e-9)
        assert pmf.tail_deficit <= 1e-10

    def test_deficit_cap_validation(self):
        spec = sieve_chain_spec(UniformW(), 5)
        with pytest.raises(ValueError):
            exact_zero_decrement_pmf(spec, 5, deficit_cap=1e-6)

    def test_unreachable_deficit_is_an_error(self):
        # stay probability 1 - 1e-7 needs ~10^8 counts to exhaust the mass
        spec = ChainSpec(floor=0, rows={1: np.array([1e-7, 1.0 - 1e-7])})
        with pytest.raises(RuntimeError):
            exact_zero_decrement_pmf(spec, 1)


class TestSieveChainSpec:
    def test_uniform_rows_are_flat(self):
        spec = sieve_chain_spec(UniformW(), 30)
        for i in (1, 7, 30):
            assert np.allclose(spec.row(i), 1.0 / (i + 1), rtol=0, atol=1e-15)

    def test_rows_sum_to_one(self):
        for wlaw in (BetaW(2, 3), BetaW(0.5, 1.5), ConstantW(0.3)):
            spec = sieve_chain_spec(wlaw, 80)
            for row in spec.rows.values():
                assert abs(row.sum() - 1.0) <= 1e-12

    def test_rejects_laws_without_moments(self):
        with pytest.raises(ValueError):
            sieve_chain_spec(LogParetoMixtureW(0.6, 0.3), 10)


class TestBarrierChainSpec:
    def test_deterministic_unit_step(self):
        # single-step law: no stays are possible above the floor
        spec = barrier_chain_spec([1.0], 30)
        pmf = exact_zero_decrement_pmf(spec, 30)
        assert pmf.masses[0] == pytest.approx(1.0, abs=1e-12)
        assert simulate_zero_decrements(spec, 30, RngStream(1, 0)) == 0
        assert geometric_rep_sampler(spec, 30, RngStream(1, 1)) == 0

    def test_rejects_zero_first_step(self):
        with pytest.raises(ValueError):
            barrier_chain_spec([0.0, 1.0], 10)

    def test_geometric_tail_pmfs_converge(self):
        # finite-mean steps: the law stabilizes in the start state
        p = 0.4 * 0.6 ** np.arange(400, dtype=float)
        spec = barrier_chain_spec(p, 400)
        d200 = exact_zero_decrement_pmf(spec, 200)
        d400 = exact_zero_decrement_pmf(spec, 400)
        assert tv_distance(d200, d400) <= 0.01


class TestSamplers:
    @pytest.mark.parametrize("wlaw,label", [(UniformW(), "uniform"), (BetaW(2, 3), "beta23")])
    def test_simulation_matches_dp(self, wlaw, label):
        spec = sieve_chain_spec(wlaw, 30)
        dp = exact_zero_decrement_pmf(spec, 30)
        draws = sample_zero_decrements(spec, 30, 20_000, RngStream(2, 0))
        emp = empirical_pmf(draws, width=dp.masses.size)
        assert tv_distance(emp, dp) <= 0.02

    def test_geometric_representation_matches_dp(self):
        spec = sieve_chain_spec(BetaW(2, 3), 30)
        dp = exact_zero_decrement_pmf(spec, 30)
        draws = sample_geometric_rep(spec, 30, 20_000, RngStream(2, 1))
        emp = empirical_pmf(draws, width=dp.masses.size)
        assert tv_distance(emp, dp) <= 0.02

    def test_scalar_samplers_run(self):
        spec = sieve_chain_spec(UniformW(), 12)
        rng = RngStream(2, 2).generator()
        vals = {simulate_zero_decrements(spec, 12, rng) for _ in range(50)}
        vals |= {geometric_rep_sampler(spec, 12, rng) for _ in range(50)}
        assert all(v >= 0 for v in vals)

    def test_floor_start(self):
        spec = barrier_chain_spec([0.5, 0.5], 10)
        assert simulate_zero_decrements(spec, 1, RngStream(2, 3)) == 0


class TestMixedPoissonDiagnostic:
    def test_poisson_pmf_exact(self):
        lam, width = 2.0, 60
        m = np.arange(width)
        masses = np.exp(-lam) * lam**m / np.array([math.factorial(k) for k in m])
        pmf = Pmf(masses=masses, tail_deficit=float(1.0 - masses.sum()))
        report = mixed_poisson_diagnostic(pmf)
        assert report.passed
        for r, phi in enumerate(report.factorial_moments, start=1):
            assert phi == pytest.approx(lam**r, rel=1e-9)
        assert abs(report.hankel2) <= report.hankel2_tol
        assert abs(report.hankel3) <= report.hankel3_tol

    def test_geometric_pmf_moments(self):
        report = mixed_poisson_diagnostic(geometric_pmf(0.5, 80))
        assert report.passed
        for r, phi in enumerate(report.factorial_moments, start=1):
            assert phi == pytest.approx(math.factorial(r), rel=1e-9)
        assert report.variance == pytest.approx(2.0, rel=1e-9)
        assert report.mean == pytest.approx(1.0, rel=1e-9)

    def test_overdispersed_sample_passes(self):
        rng = RngStream(3, 0).generator()
        lam = rng.exponential(size=50_000)
        report = mixed_poisson_diagnostic(rng.poisson(lam))
        assert report.passed

    def test_underdispersed_input_flagged(self):
        # Binomial(10, 1/2) has variance below its mean: not mixed Poisson
        from scipy.stats import binom

        masses = binom.pmf(np.arange(11), 10, 0.5)
        report = mixed_poisson_diagnostic(Pmf(masses=masses / masses.sum()))
        assert not report.passed
        assert report.violations

    def test_rejects_heavy_deficit(self):
        with pytest.raises(ValueError):
            mixed_poisson_diagnostic(Pmf(masses=np.array([0.5]), tail_deficit=0.5))


class TestJsonRoundTrip:
    def test_round_trip_is_exact(self):
        spec = sieve_chain_spec(BetaW(2, 3), 15)
        clone = chain_from_json(chain_to_json(spec))
        assert clone.floor == spec.floor
        assert set(clone.rows) == set(spec.rows)
        for i in spec.rows:
            assert np.array_equal(clone.rows[i], spec.rows[i])

    def test_schema_shape(self):
        spec = barrier_chain_spec([0.5, 0.5], 4)
        payload = json.loads(chain_to_json(spec))
        assert payload["floor"] == 1
        assert set(payload["rows"]) == {"2", "3", "4"}
        assert all(isinstance(x, str) for x in payload["rows"]["3"])

    def test_invalid_payload_rejected(self):
        with pytest.raises(ValueError):
            chain_from_json(json.dumps({"floor": 0, "rows": {"1": ["0.5", "0.4"]}}))
