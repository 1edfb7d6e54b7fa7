"""Underdamped Langevin Monte Carlo with an exact one-step Gaussian kernel,
baseline samplers, closed-form Gaussian diagnostics, and numeric verifiers
for the convergence analysis's matrix bounds."""

from .potentials import (
    LocallyNonconvexPotential,
    Potential,
    PotentialConstants,
    QuadraticPotential,
    nonconvex_constants,
    potential_from_config,
)
from .integrators import (
    PhaseState,
    StepCoefficients,
    em_step,
    generic_dq_step,
    hmc_momentum_refresh,
    hmc_step,
    leapfrog_step,
    overdamped_step,
    rng_stream,
    spawn_streams,
    underdamped_covariance,
    underdamped_mean,
    underdamped_step,
)
from .schedule import (
    Schedule,
    c_n_tilde,
    initial_lyapunov_bound,
    iteration_count,
    iteration_count_from_bound,
    guaranteed_schedule,
    step_size,
)
from .gaussian import (
    AffineKernel,
    BlockKernel,
    BlockLaw,
    GaussianLaw,
    KernelScan,
    LyapunovMatrixS,
    block_kl,
    block_lyapunov,
    block_w2,
    initial_phase_law,
    kernel_of_sampler,
    kl_gaussian,
    lyapunov_gaussian,
    position_marginal,
    position_marginal_dense,
    propagate_gaussian,
    talagrand_upper_bound,
    target_phase_law,
    tv_upper_bound,
    w2_gaussian,
)
from .verify import (
    check_fact1,
    check_fact2,
    check_m_bound,
    check_mc_bound,
    check_step_formulas,
    eta_coefficient,
)
from .harness import (
    ConfigError,
    RunConfig,
    figure_accel,
    iterations_to_kl,
    largest_stable_step,
    run,
    verify_all,
)

__version__ = "0.1.0"
