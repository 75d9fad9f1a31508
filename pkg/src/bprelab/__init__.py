"""Numerical laboratory for supercritical branching processes in i.i.d.
random environments: exact finite-horizon laws, small-value coefficients,
critical exponents, and reproducible Monte-Carlo estimation of the
martingale limit."""

__version__ = "0.1.0"

from .env_model import (
    EnvironmentModel,
    FractionalLinearParams,
    OffspringLaw,
    env_expectation,
    env_moment_m,
    fractional_linear_law,
    gf_eval,
    load_env_file,
    make_environment,
    make_offspring_law,
    parse_env_dict,
)
from .exact_engine import (
    DistributionVector,
    Trajectory,
    TransitionKernel,
    build_kernel,
    default_truncation,
    exact_dist,
    gen_func,
    harmonic_moment_Zn,
    propagate,
)
from .exponents import (
    ExponentReport,
    alpha_k,
    build_report,
    classify_and_rho,
    moment_criterion,
    solve_a_k,
    solve_r_k,
)
from .montecarlo import (
    EstimateWithCI,
    SimConfig,
    estimate_harmonic_moment_W,
    estimate_laplace,
    plain_harmonic_Zn,
    simulate_ensemble,
    simulate_path,
    tilted_harmonic_Zn,
)
from .qseries import (
    QTable,
    Q_eval,
    functional_eq_residual,
    gamma_k,
    q_table,
    ratio_sequence,
)

__all__ = [
    "__version__",
    "EnvironmentModel",
    "FractionalLinearParams",
    "OffspringLaw",
    "env_expectation",
    "env_moment_m",
    "fractional_linear_law",
    "gf_eval",
    "load_env_file",
    "make_environment",
    "make_offspring_law",
    "parse_env_dict",
    "DistributionVector",
    "Trajectory",
    "TransitionKernel",
    "build_kernel",
    "default_truncation",
    "exact_dist",
    "gen_func",
    "harmonic_moment_Zn",
    "propagate",
    "ExponentReport",
    "alpha_k",
    "build_report",
    "classify_and_rho",
    "moment_criterion",
    "solve_a_k",
    "solve_r_k",
    "EstimateWithCI",
    "SimConfig",
    "estimate_harmonic_moment_W",
    "estimate_laplace",
    "plain_harmonic_Zn",
    "simulate_ensemble",
    "simulate_path",
    "tilted_harmonic_Zn",
    "QTable",
    "Q_eval",
    "functional_eq_residual",
    "gamma_k",
    "q_table",
    "ratio_sequence",
]
