"""Robust estimation for binary regression with general link functions.

Maximum likelihood, beta-divergence and gamma-divergence (including negative
gamma) losses, contamination diagnostics and a Monte Carlo harness.
"""

from importlib.metadata import PackageNotFoundError, version as _version

from .diagnostics import (
    BoundednessReport,
    ProbeResult,
    TailClass,
    TruthModel,
    boundedness_scan,
    contamination_effect,
    expected_conditional_score,
    fisher_consistency_check,
    tail_limit_probe,
)
from .estimation import (
    FitOptions,
    FitResult,
    FitStatus,
    classify,
    empirical_risk,
    fit,
    pseudo_true_parameter,
    risk_gradient,
)
from .exceptions import BinRobustError, ContractError, DomainError, ParameterError
from .links import LINK_NAMES, Link, get_link
from .losses import LossSpec, loss, per_sample_gradient, psi
from .model import (
    Dataset,
    Observation,
    conditional_prob,
    escort_probability,
    escort_score,
    linear_predictor,
    score,
)
from .simulation import (
    CaseAConfig,
    CaseBConfig,
    MonteCarloReport,
    Scenario1Config,
    accuracy,
    run_monte_carlo,
)

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = [
    "BinRobustError", "BoundednessReport", "CaseAConfig", "CaseBConfig",
    "ContractError", "Dataset", "DomainError", "FitOptions", "FitResult",
    "FitStatus", "LINK_NAMES", "Link", "LossSpec", "MonteCarloReport",
    "Observation", "ParameterError", "ProbeResult", "Scenario1Config",
    "TailClass", "TruthModel", "accuracy", "boundedness_scan", "classify",
    "conditional_prob", "contamination_effect", "empirical_risk",
    "escort_probability", "escort_score", "expected_conditional_score",
    "fisher_consistency_check", "fit", "get_link", "linear_predictor", "loss",
    "per_sample_gradient", "pseudo_true_parameter", "psi", "risk_gradient",
    "run_monte_carlo", "score", "tail_limit_probe",
]
