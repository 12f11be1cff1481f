"""Multi-index MCMC for Bayesian inversion of a stochastic heat equation.

A hierarchy of coupled exponential-Euler discretizations, pCN-MH chains
targeting per-index approximate couplings, and a mixed-difference estimator
whose increments telescope to the continuum posterior expectation.  An
analytic Gaussian oracle supplies ground truth for error studies.
"""

from .chain import ChainConfig, ChainResult, RhoTuner, mh_accept, pcn_propose, run_chain, tune_rho
from .estimators import (
    AllocationPlan,
    IncrementEstimate,
    MimcmcResult,
    RateFit,
    allocate_general,
    allocate_spde,
    batch_means_se,
    cost_model,
    fit_rates,
    increment_batch_se,
    increment_self_normalized,
    increment_simplified,
    mimcmc_estimate,
    single_level_mcmc,
)
from .experiments import ExperimentConfig, cmd_cost_error, cmd_generate_data, cmd_rates
from .forward import (
    BaseResolution,
    CoupledSolution,
    ModelParams,
    ObservationConfig,
    Resolution,
    coarsen_space,
    coarsen_time,
    coupled_solve,
    draw_noise,
    exp_euler_solve,
    observe,
    qoi,
    qoi_weights,
    resolution,
    sine_basis,
)
from .indices import (
    CornerSet,
    MultiIndex,
    corner_coefficients,
    corners,
    delta_weights,
    enumerate_index_set,
    pair_sign,
    pair_signs,
)
from .oracle import (
    GaussianSpec,
    LinearQoI,
    condition_on_data,
    condition_on_data_covariance_form,
    discrete_joint_gaussian,
    discrete_posterior,
    generate_data,
    joint_gaussian,
    mode_moments,
    posterior_qoi,
    read_fixture,
    recurrence_moments,
    sample_modes_at_times,
    write_fixture,
)
from .seeding import derive_rng
from .weights import (
    CornerWeights,
    LikelihoodSpec,
    corner_weights,
    log_likelihood,
    multi_increment,
    multi_increment_scaled,
)

__version__ = "0.1.0"
