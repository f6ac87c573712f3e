"""Simulation and verification lab for SDEs driven by fractional Brownian motion."""

from ._backend import NAME as BACKEND
from .bounds import (
    BoundProfile,
    Mode,
    concentration_envelope,
    growth_exponent,
    moment_to_expmoment_bound,
    occupation_envelope,
    psi_big,
    psi_continuous,
    psi_discrete,
    sum_psi_squared,
)
from .config import ExperimentConfig, build_config, load_config
from .diagnostics import (
    GProcessSpec,
    check_g_holder_bound,
    g_increment_second_moment,
    gtilde_increment_second_moment,
    sup_bm_moment,
    sup_bm_tail,
)
from .errors import (
    CalibrationError,
    ConfigError,
    DomainError,
    FactorizationError,
    FbmLabError,
    IntegrationError,
    QuadratureError,
)
from .harness import (
    check_envelope_domination,
    fit_scaling_exponent,
    gaussian_oracle_variance,
    run_occupation,
    run_occupation_continuous,
    run_occupation_discrete,
)
from .kernel import (
    HurstParameter,
    KernelFamily,
    KernelSpec,
    Regime,
    cell_weight_matrix,
    eval_kernel,
    eval_kernel_time_derivative,
    kernel_variance,
)
from .sampler import RngStream, SamplePath, TimeGrid, sample_bm, sample_fbm_cholesky, sample_fbm_volterra
from .sde import DriftKind, DriftModel, SdeSpec, integrate, validate_drift
from .stats import McEstimate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BACKEND",
    "BoundProfile",
    "build_config",
    "CalibrationError",
    "cell_weight_matrix",
    "check_envelope_domination",
    "check_g_holder_bound",
    "concentration_envelope",
    "ConfigError",
    "DomainError",
    "DriftKind",
    "DriftModel",
    "eval_kernel",
    "eval_kernel_time_derivative",
    "ExperimentConfig",
    "FactorizationError",
    "FbmLabError",
    "fit_scaling_exponent",
    "g_increment_second_moment",
    "gaussian_oracle_variance",
    "GProcessSpec",
    "growth_exponent",
    "gtilde_increment_second_moment",
    "HurstParameter",
    "integrate",
    "IntegrationError",
    "kernel_variance",
    "KernelFamily",
    "KernelSpec",
    "load_config",
    "McEstimate",
    "Mode",
    "moment_to_expmoment_bound",
    "occupation_envelope",
    "psi_big",
    "psi_continuous",
    "psi_discrete",
    "QuadratureError",
    "Regime",
    "RngStream",
    "run_occupation",
    "run_occupation_continuous",
    "run_occupation_discrete",
    "sample_bm",
    "sample_fbm_cholesky",
    "sample_fbm_volterra",
    "SamplePath",
    "SdeSpec",
    "sum_psi_squared",
    "sup_bm_moment",
    "sup_bm_tail",
    "TimeGrid",
    "validate_drift",
]
