"""Empirical-process CLT checks for weakly dependent multivariate data.

Simulate causal linear processes, smooth the empirical process with
Holder bump functions on quantile partitions, chain the smoothing error
dyadically, quantify physical dependence, and test the Gaussian limit
against Monte Carlo evidence.
"""

__version__ = "0.1.0"

from .clt import (
    ApproximationReport,
    CltReport,
    CovKernelEstimate,
    FindimCheck,
    SigmaEstimate,
    approximation_quality,
    calibrate_ks_threshold,
    clt_report,
    findim_gaussian_check,
    gaussian_fit_test,
    limit_covariance_estimate,
    normalized_sums,
    sigma_f_estimate,
    sup_statistic_samples,
)
from .dependence import (
    BumpDifference,
    DependenceProfile,
    ExactMomentReport,
    MixingReport,
    MomentBoundReport,
    RateFamily,
    ReferenceStats,
    condition_gamma_check,
    delta_estimate,
    delta_linear_bound,
    estimate_profile,
    exact_moment_oracle,
    holder_norm_bound,
    linear_decay_threshold,
    mixing_covariance_estimate,
    mixing_scan,
    moment_bound_check,
    reference_stats,
    stationary_draws,
    theta_series_check,
)
from .empirical import (
    ChainGrid,
    EvalGrid,
    PartitionGrid,
    PsiFn,
    SmoothedProcess,
    boundary_augmented_grid,
    build_chain_grid,
    build_partition,
    cell_of,
    chain_indices,
    choose_K,
    empirical_cdf,
    empirical_process,
    make_psi,
    smoothed_empirical_process,
    sup_distance,
    telescoping_decomposition,
)
from .errors import (
    CheckFailure,
    ConfigError,
    ContractError,
    CornerError,
    DomainError,
    EmpcltError,
    MomentError,
    ParameterError,
    ResourceError,
    ShapeError,
    SingularityError,
    SizeError,
)
from .holder import (
    ControlFunction,
    EmpiricalCdf,
    GaussianCdf,
    HolderBump,
    MarginalCdf,
    InterpolatedCdf,
    MonteCarloCdf,
    ProductCdf,
    UniformCdf,
    bump_eval,
    bump_holder_norm,
    control_psi,
    generalized_inverse,
    holder_norm_estimate,
    modulus_of_continuity,
    ramp,
    theta_holder_constant,
)
from .processes import (
    CoefficientModel,
    CoupledPath,
    InnovationLaw,
    ProcessSpec,
    SamplePath,
    simulate_coupled,
    simulate_linear,
    time_delay_embed,
)
from .rng import SCHEME, derive_seed, substream

__all__ = [name for name in dir() if not name.startswith("_")]
