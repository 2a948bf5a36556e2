"""sievesim: Bernoulli sieve occupancy, perturbed random walks, and the
inverse-stable-subordinator limit law they share.

The package is organized around cross-validation: every quantity with a
closed form (moments, Laplace exponents, conditional formulas, exact
zero-decrement laws) is implemented next to at least one independent
Monte Carlo construction of the same object, and the verification suite
(:mod:`sievesim.acceptance`) pins the tolerances at which they must agree.
"""

from .chains import (
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
from .limitlaw import (
    AlphaBeta,
    JumpProcessPath,
    SubordinatorPath,
    levy_tail_mass,
    mittag_leffler_moment,
    phi_alpha,
    sample_jump_path,
    sample_levy_jump,
    sample_mittag_leffler,
    sample_subordinator_marginal,
    sample_subordinator_path,
    sample_z_expfunctional,
    sample_z_pathint,
    z_moment,
)
from .randkit import (
    RngStream,
    StableSpec,
    beta_fn,
    gamma_fn,
    sample_exponential,
    sample_poisson,
    sample_stable,
    sample_uniform01,
)
from .sieve import (
    BetaW,
    ConstantW,
    FrequencySeq,
    LogParetoMixtureW,
    OccupancyResult,
    UniformW,
    allocate_multinomial,
    allocate_uniform,
    mean_empty_given_freqs,
    var_empty_given_freqs,
    normalization_ratio,
    poissonized_occupancy,
    sample_occupancy,
    limit_trend_experiment,
)
from .stats import (
    Accumulator,
    McEstimate,
    chi_square,
    ecdf,
    ks_one_sample,
    ks_two_sample,
    mc_accumulate,
    tv_distance,
)
from .walks import (
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

__version__ = "0.1.0"
