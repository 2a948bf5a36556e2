"""Verification suite: every exit check of the package with its pinned
tolerance, runnable one by one or in named groups.

Each criterion is deterministic given the master seed: replicate streams
are indexed per criterion, so any criterion rerun with the same seed
reproduces its metrics exactly, regardless of what else ran.

Two distributional checks (numbers 12 and 13) probe limits with a
logarithmic convergence rate at fixed desk scale; both run exactly at
their pinned scales and print their measured values.  Number 12's KS
distance is floored by the lattice of the finite-scale law above its
tolerance (it reads FAIL; the details carry the analysis), and number
13's growth slope sits at its band edge (it passes at the default seed).
The gaps are the finite-scale remainder of the limit theorems, not
sampler error.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import chains, limitlaw, sieve, stats, walks
from .randkit import RngStream, gamma_fn

DEFAULT_SEED = 20260811

SUITES = {
    "exact": (1, 2),
    "sampler": (3, 4, 5, 6),
    "chain": (1, 7),
    "sieve": (8, 9, 10, 14),
    "walk": (11, 12),
    "trend": (13,),
    "determinism": (15,),
    "all": tuple(range(1, 16)),
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: str
    metrics: dict = field(default_factory=dict)

    def report_line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number:2d} ({self.name}): {self.details}"


def suite_criteria(suite: str):
    try:
        return SUITES[suite]
    except KeyError:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}") from None


# ----------------------------------------------------------------------
# shared limit-law draws (canonical sizes so results do not depend on
# which criteria run together)

_Z_SIZES = {
    (0.5, 0.0): 100_000,
    (0.5, 0.25): 100_000,
    (0.75, 0.5): 100_000,
    (0.5, 0.5): 100_000,
    (0.6, 0.3): 20_000,
}
_Z_GRID = 1e-4
_Z_CACHE: dict = {}


def _z_draws(alpha: float, beta: float, seed: int) -> np.ndarray:
    key = (alpha, beta, seed)
    if key not in _Z_CACHE:
        stream = 1000 + sorted(_Z_SIZES).index((alpha, beta))
        rng = RngStream(seed, stream).generator()
        params = limitlaw.AlphaBeta(alpha, beta)
        _Z_CACHE[key] = limitlaw.sample_z_pathint(
            params, _Z_GRID, rng, size=_Z_SIZES[(alpha, beta)]
        )
    return _Z_CACHE[key]


# ----------------------------------------------------------------------

def crit_01_exact_dp_geometric(seed: int, jobs: int) -> CriterionResult:
    """Every chain with s_{j,floor} = s_{j,j} has the geometric(1/2) law."""
    specs = {
        "uniform sieve": chains.sieve_chain_spec(sieve.UniformW(), 60),
        "half-constant sieve": chains.sieve_chain_spec(sieve.ConstantW(0.5), 60),
        "dyadic barrier": chains.barrier_chain_spec(2.0 ** -np.arange(1, 61, dtype=float), 60),
    }
    worst = 0.0
    for spec in specs.values():
        for n in range(spec.floor + 1, 61):
            pmf = chains.exact_zero_decrement_pmf(spec, n, deficit_cap=1e-12)
            m_top = min(40, pmf.masses.size - 1)
            target = 2.0 ** -(np.arange(m_top + 1) + 1.0)
            worst = max(worst, float(np.abs(pmf.masses[: m_top + 1] - target).max()))
    passed = worst <= 1e-10
    return CriterionResult(
        1, "exact geometric law from the zero-decrement DP", passed,
        f"max |pmf(m) - 2^-(m+1)| = {worst:.2e} over n <= 60, m <= 40 (tol 1e-10)",
        {"max_abs_err": worst},
    )


def crit_02_moment_identities(seed: int, jobs: int) -> CriterionResult:
    worst = 0.0
    for alpha in np.arange(0.1, 0.95, 0.1):
        alpha = round(float(alpha), 10)
        for n in range(1, 7):
            fact = math.factorial(n)
            rel1 = abs(limitlaw.z_moment(limitlaw.AlphaBeta(alpha, alpha), n) - fact) / fact
            ml = limitlaw.mittag_leffler_moment(alpha, n)
            rel2 = abs(limitlaw.z_moment(limitlaw.AlphaBeta(alpha, 0.0), n) - ml) / ml
            prod = math.prod(limitlaw.phi_alpha(alpha, float(k)) + 1.0 for k in range(1, n + 1))
            closed = gamma_fn(1.0 + n * alpha) * gamma_fn(1.0 - alpha) ** n
            rel3 = abs(prod - closed) / closed
            worst = max(worst, rel1, rel2, rel3)
    passed = worst <= 1e-10
    return CriterionResult(
        2, "moment-formula identities", passed,
        f"max relative error {worst:.2e} over alpha grid, n <= 6 (tol 1e-10)",
        {"max_rel_err": worst},
    )


def crit_03_pathint_moments(seed: int, jobs: int) -> CriterionResult:
    combos = [(0.5, 0.0), (0.5, 0.25), (0.75, 0.5), (0.5, 0.5)]
    fails, details = [], []
    for alpha, beta in combos:
        z = _z_draws(alpha, beta, seed)
        params = limitlaw.AlphaBeta(alpha, beta)
        for order in (1, 2):
            target = limitlaw.z_moment(params, order)
            est = stats.mc_accumulate(z**order)
            tol = 3.0 * est.stderr + 0.02 * target
            ok = abs(est.mean - target) <= tol
            if not ok:
                fails.append((alpha, beta, order))
            details.append(f"({alpha},{beta}) m{order} {est.mean:.4f}~{target:.4f}")
    passed = not fails
    return CriterionResult(
        3, "path-integral sampler moments", passed,
        f"grid 1e-4, 1e5 draws; {'all within 3SE+2%' if passed else f'failures: {fails}'}",
        {"summary": details},
    )


def crit_04_special_case_laws(seed: int, jobs: int) -> CriterionResult:
    z_aa = _z_draws(0.5, 0.5, seed)[:10_000]
    d_exp = stats.ks_one_sample(z_aa, lambda x: -np.expm1(-np.maximum(x, 0.0)))
    z_a0 = _z_draws(0.5, 0.0, seed)[:10_000]
    rng = RngStream(seed, 40).generator()
    ml = limitlaw.sample_mittag_leffler(0.5, rng, size=10_000)
    d_ml = stats.ks_two_sample(z_a0, ml)
    passed = d_exp <= 0.02 and d_ml <= 0.025
    return CriterionResult(
        4, "special-case laws (exponential and Mittag-Leffler)", passed,
        f"KS vs Exp(1) {d_exp:.4f} (tol 0.02); KS path-integral vs direct ML {d_ml:.4f} (tol 0.025)",
        {"ks_exponential": d_exp, "ks_mittag_leffler": d_ml},
    )


def crit_05_expfunctional_agreement(seed: int, jobs: int) -> CriterionResult:
    rng = RngStream(seed, 50).generator()
    z_ef = limitlaw.sample_z_expfunctional(limitlaw.AlphaBeta(0.5, 0.25), 1e-4, rng, size=10_000)
    z_pi = _z_draws(0.5, 0.25, seed)[:10_000]
    d = stats.ks_two_sample(z_ef, z_pi)
    passed = d <= 0.03
    return CriterionResult(
        5, "exponential-functional sampler agreement", passed,
        f"KS vs path integral at (0.5, 0.25), eps 1e-4: {d:.4f} (tol 0.03)",
        {"ks": d},
    )


def crit_06_laplace_exponent(seed: int, jobs: int) -> CriterionResult:
    rng = RngStream(seed, 60).generator()
    eps, reps = 1e-3, 200_000
    fails, worst = [], 0.0
    for alpha in (0.3, 0.5, 0.8):
        y = limitlaw.sample_subordinator_marginal(
            alpha, 1.0, eps, rng, size=reps, small_jump_drift=True
        )
        for x in (0.5, 1.0, 2.0):
            vals = np.exp(-x * y)
            target = math.exp(-limitlaw.phi_alpha(alpha, x))
            est = stats.mc_accumulate(vals)
            tol = 3.0 * est.stderr + 0.01 * target
            gap = abs(est.mean - target)
            worst = max(worst, gap / target)
            if gap > tol:
                fails.append((alpha, x))
    passed = not fails
    return CriterionResult(
        6, "truncated-jump Laplace exponent", passed,
        f"eps 1e-3 with small-jump mean drift; worst relative gap {worst:.2%}"
        + ("" if passed else f"; failures {fails}"),
        {"worst_rel_gap": worst},
    )


def crit_07_chain_sampler_agreement(seed: int, jobs: int) -> CriterionResult:
    n, reps = 30, 100_000
    worst = 0.0
    lines = []
    for k, (label, wlaw) in enumerate([("uniform", sieve.UniformW()), ("beta(2,3)", sieve.BetaW(2, 3))]):
        spec = chains.sieve_chain_spec(wlaw, n)
        dp = chains.exact_zero_decrement_pmf(spec, n)
        sim = chains.sample_zero_decrements(spec, n, reps, RngStream(seed, 70 + 2 * k).generator())
        rep = chains.sample_geometric_rep(spec, n, reps, RngStream(seed, 71 + 2 * k).generator())
        width = max(dp.masses.size, int(sim.max()) + 1, int(rep.max()) + 1)
        sim_pmf = chains.empirical_pmf(sim, width=width)
        rep_pmf = chains.empirical_pmf(rep, width=width)
        tvs = (
            stats.tv_distance(sim_pmf, dp),
            stats.tv_distance(rep_pmf, dp),
            stats.tv_distance(sim_pmf, rep_pmf),
        )
        worst = max(worst, *tvs)
        lines.append(f"{label}: {max(tvs):.4f}")
    passed = worst <= 0.01
    return CriterionResult(
        7, "chain sampler three-way agreement", passed,
        f"worst pairwise TV at n=30, 1e5 reps: {worst:.4f} (tol 0.01; {'; '.join(lines)})",
        {"worst_tv": worst},
    )


def crit_08_symmetric_geometric(seed: int, jobs: int) -> CriterionResult:
    worst = 0.0
    stream = 80
    for wlaw in (sieve.UniformW(), sieve.BetaW(2, 2)):
        for n in (5, 50, 500):
            rng = RngStream(seed, stream).generator()
            stream += 1
            batch = sieve.sample_occupancy(wlaw, n, 100_000, rng)
            emp = chains.empirical_pmf(batch.empty_in_range)
            tv = stats.tv_distance(emp, chains.geometric_pmf(0.5, emp.masses.size))
            worst = max(worst, tv)
    passed = worst <= 0.01
    return CriterionResult(
        8, "symmetric-W geometric empty-box law", passed,
        f"worst TV vs geometric(1/2) over uniform/beta(2,2), n in {{5,50,500}}: {worst:.4f} (tol 0.01)",
        {"worst_tv": worst},
    )


def crit_09_chain_vs_sieve(seed: int, jobs: int) -> CriterionResult:
    rng = RngStream(seed, 90).generator()
    spec = chains.sieve_chain_spec(sieve.UniformW(), 100)
    dp = chains.exact_zero_decrement_pmf(spec, 100)
    batch = sieve.sample_occupancy(sieve.UniformW(), 100, 100_000, rng, method="uniform")
    emp = chains.empirical_pmf(batch.empty_in_range, width=dp.masses.size)
    tv = stats.tv_distance(emp, dp)
    passed = tv <= 0.01
    return CriterionResult(
        9, "chain DP vs sieve occupancy", passed,
        f"TV between DP law and interval-allocation sample at n=100: {tv:.4f} (tol 0.01)",
        {"tv": tv},
    )


def crit_10_conditional_formulas(seed: int, jobs: int) -> CriterionResult:
    t = 100.0
    freqs = sieve.FrequencySeq(sieve.UniformW(), RngStream(seed, 100).generator())
    mean_formula = sieve.mean_empty_given_freqs(freqs, t)
    var_formula = sieve.var_empty_given_freqs(freqs, t)
    rng = RngStream(seed, 101).generator()
    replay = sieve.sample_occupancy(
        sieve.UniformW(), 100, 10_000, rng, freqs=freqs, poissonized=True
    ).empty_in_range
    est = stats.mc_accumulate(replay)
    mean_ok = abs(est.mean - mean_formula) <= 3.0 * est.stderr
    var_emp = float(np.var(replay, ddof=1))
    var_rel = abs(var_emp - var_formula) / var_formula
    var_ok = var_rel <= 0.05
    passed = mean_ok and var_ok
    return CriterionResult(
        10, "conditional mean/variance formulas", passed,
        f"mean {est.mean:.4f} vs {mean_formula:.4f} (3SE {3*est.stderr:.4f}); "
        f"variance {var_emp:.4f} vs {var_formula:.4f} (rel {var_rel:.2%}, tol 5%)",
        {"mean_gap": abs(est.mean - mean_formula), "var_rel": var_rel},
    )


def crit_11_window_statistic_trend(seed: int, jobs: int) -> CriterionResult:
    law = walks.PrwLaw.independent(walks.ParetoLaw(0.5), walks.ParetoLaw(0.25))
    q_fn = lambda x: (1.0 + x) ** -0.25
    target = limitlaw.z_moment(limitlaw.AlphaBeta(0.5, 0.25), 1)
    t_list = (1e2, 1e3, 1e4)
    reps = 100_000
    rng = RngStream(seed, 110).generator()
    sums = np.zeros(3)
    for _ in range(reps):
        path = walks.generate_path(law, 1e4, rng)
        for j, t in enumerate(t_list):
            sums[j] += walks.weighted_window_statistic(path, t, q_fn, law.xi_tail)
    rel_errs = np.abs(sums / reps - target) / target
    monotone = bool(rel_errs[0] > rel_errs[1] > rel_errs[2])
    passed = rel_errs[2] <= 0.15 and monotone
    return CriterionResult(
        11, "weighted-window statistic mean trend", passed,
        f"relative errors at t=1e2/1e3/1e4: {rel_errs[0]:.2%}/{rel_errs[1]:.2%}/{rel_errs[2]:.2%} "
        f"(final tol 15%, monotone decrease {'yes' if monotone else 'NO'})",
        {"rel_errs": [float(x) for x in rel_errs]},
    )


def crit_12_walk_functionals_vs_limit(seed: int, jobs: int) -> CriterionResult:
    law = walks.PrwLaw.independent(walks.ParetoLaw(0.5), walks.ParetoLaw(0.25))
    x, reps = 1e4, 10_000
    rng = RngStream(seed, 120).generator()
    ratio = float(np.asarray(law.xi_tail(x)) / np.asarray(law.eta_tail(x)))
    t_vals = np.empty(reps)
    r_vals = np.empty(reps)
    for r in range(reps):
        path = walks.generate_path(law, x + 40.0, rng)
        t_vals[r] = ratio * walks.empty_box_functional(path, log_t=x)
        r_vals[r] = ratio * walks.busy_server_count(path, x)
    z = _z_draws(0.5, 0.25, seed)[:reps]
    d_t = stats.ks_two_sample(t_vals, z)
    d_r = stats.ks_two_sample(r_vals, z)
    atoms = np.bincount(np.round(r_vals / ratio).astype(int))
    max_atom = float(atoms.max() / atoms.sum())
    passed = d_t <= 0.05 and d_r <= 0.05
    return CriterionResult(
        12, "walk functionals vs limit law at log t = 1e4", passed,
        f"KS T {d_t:.4f}, KS R {d_r:.4f} (tol 0.05); the normalized laws sit on a "
        f"lattice of step {ratio:.3g} whose largest atom is {max_atom:.3f}, which floors "
        f"the KS distance near that value at this scale",
        {"ks_T": d_t, "ks_R": d_r, "lattice_step": ratio, "max_atom": max_atom},
    )


def crit_13_mixture_growth_trend(seed: int, jobs: int) -> CriterionResult:
    wlaw = sieve.LogParetoMixtureW(0.6, 0.3, 0.5)
    rng = RngStream(seed, 130).generator()
    z = _z_draws(0.6, 0.3, seed)
    rows = sieve.limit_trend_experiment(
        wlaw, [10**3, 10**4, 10**5, 10**6], 20_000, rng, z_draws=z
    )
    log_means = [
        math.log(r.mean_normalized / sieve.normalization_ratio(wlaw, r.balls)) for r in rows
    ]
    log_logs = [math.log(math.log(r.balls)) for r in rows]
    slope = float(np.polyfit(log_logs, log_means, 1)[0])
    ks_seq = [r.ks_vs_limit for r in rows]
    ks_monotone = all(ks_seq[i] >= ks_seq[i + 1] for i in range(len(ks_seq) - 1))
    slope_ok = abs(slope - 0.3) <= 0.1
    passed = slope_ok and ks_monotone
    slope_note = "" if slope_ok else (
        ", OUTSIDE: the slowly varying prefactor still decays over this n range"
    )
    return CriterionResult(
        13, "empty-box growth trend for the logarithmic mixture", passed,
        f"slope {slope:.3f} (band 0.3 +- 0.1{slope_note}); KS sequence "
        + "/".join(f"{d:.3f}" for d in ks_seq)
        + (" non-increasing" if ks_monotone else " NOT non-increasing"),
        {"slope": slope, "ks_sequence": ks_seq},
    )


def crit_14_mixed_poisson_diagnostics(seed: int, jobs: int) -> CriterionResult:
    rng = RngStream(seed, 140).generator()
    problems = []
    # constructed mixed-Poisson inputs must pass
    pois = rng.poisson(3.0, size=100_000)
    if not chains.mixed_poisson_diagnostic(pois).passed:
        problems.append("Poisson(3) sample flagged")
    geo_report = chains.mixed_poisson_diagnostic(chains.geometric_pmf(0.5, 80))
    if not geo_report.passed:
        problems.append("geometric(1/2) pmf flagged")
    if any(abs(geo_report.factorial_moments[r - 1] - math.factorial(r)) > 1e-6 for r in range(1, 5)):
        problems.append("geometric factorial moments differ from r!")
    # advisory run on heavy-tail-free sieve samples
    b21 = sieve.BetaW(2, 1)
    batch = sieve.sample_occupancy(b21, 100_000, 100_000, rng)
    sieve_report = chains.mixed_poisson_diagnostic(batch.empty_in_range)
    if not sieve_report.passed:
        problems.append("beta(2,1) sieve sample flagged")
    # limit comparison: mixed Poisson with parameter 2|log(1-W)|
    w_draws = b21.sample(rng, size=100_000)
    mixed = rng.poisson(2.0 * -np.log1p(-w_draws))
    width = max(int(batch.empty_in_range.max()), int(mixed.max())) + 1
    tv = stats.tv_distance(
        chains.empirical_pmf(batch.empty_in_range, width=width),
        chains.empirical_pmf(mixed, width=width),
    )
    if tv > 0.02:
        problems.append(f"TV vs mixed-Poisson limit {tv:.4f} > 0.02")
    passed = not problems
    return CriterionResult(
        14, "mixed-Poisson diagnostics", passed,
        f"constructed inputs pass; sieve sample passes; TV vs mixed-Poisson limit {tv:.4f} (tol 0.02)"
        if passed else "; ".join(problems),
        {"tv_vs_limit": tv},
    )


def crit_15_determinism(seed: int, jobs: int) -> CriterionResult:
    from . import cli

    argv_base = [
        "sieve", "--wlaw", "uniform", "--balls", "50",
        "--reps", "12000", "--seed", str(seed), "--format", "csv",
    ]
    blobs = []
    for run_jobs in (1, 2):
        with tempfile.TemporaryDirectory() as tmp:
            code = cli.main(argv_base + ["--out", tmp, "--jobs", str(run_jobs)])
            if code != 0:
                return CriterionResult(15, "seeded determinism and parallelism independence",
                                       False, f"CLI exited {code}", {})
            files = sorted(Path(tmp).iterdir())
            blobs.append({f.name: f.read_bytes() for f in files})
    identical = blobs[0] == blobs[1]
    # replicate streams must also be reproducible in isolation
    a = RngStream(seed, 7).generator().random(64)
    b = RngStream(seed, 7).generator().random(64)
    c = RngStream(seed, 8).generator().random(64)
    stream_ok = bool(np.array_equal(a, b) and not np.array_equal(a, c))
    passed = identical and stream_ok
    return CriterionResult(
        15, "seeded determinism and parallelism independence", passed,
        f"outputs byte-identical across --jobs 1/2: {identical}; "
        f"stream reproducibility and separation: {stream_ok}",
        {"byte_identical": identical, "stream_ok": stream_ok},
    )


_CRITERIA = {
    1: crit_01_exact_dp_geometric,
    2: crit_02_moment_identities,
    3: crit_03_pathint_moments,
    4: crit_04_special_case_laws,
    5: crit_05_expfunctional_agreement,
    6: crit_06_laplace_exponent,
    7: crit_07_chain_sampler_agreement,
    8: crit_08_symmetric_geometric,
    9: crit_09_chain_vs_sieve,
    10: crit_10_conditional_formulas,
    11: crit_11_window_statistic_trend,
    12: crit_12_walk_functionals_vs_limit,
    13: crit_13_mixture_growth_trend,
    14: crit_14_mixed_poisson_diagnostics,
    15: crit_15_determinism,
}


def run_criterion(number: int, seed: int = DEFAULT_SEED, jobs: int = 1) -> CriterionResult:
    try:
        fn = _CRITERIA[number]
    except KeyError:
        raise ValueError(f"no criterion {number}") from None
    return fn(seed, jobs)


def run_suite(suite: str = "all", seed: int = DEFAULT_SEED, jobs: int = 1):
    return [run_criterion(k, seed=seed, jobs=jobs) for k in suite_criteria(suite)]
