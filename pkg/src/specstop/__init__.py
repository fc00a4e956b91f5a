"""Spectral-filter kernel regression with data-driven early stopping.

The package fits kernel estimators by spectrally filtered least squares
(gradient-descent and ridge filters), stops them by comparing observable
risks against noise thresholds (plain, eigenvalue-smoothed, and several
benchmark rules), quantifies hardness through empirical critical radii and
statistical dimensions, estimates the nuisance quantities those thresholds
need, and ships a deterministic simulation harness plus a CLI.
"""

from .complexity import (
    AssumptionAudit,
    CriticalRadiusResult,
    assumption_audit,
    critical_radius,
    kernel_complexity,
    statistical_dimension,
)
from .estimators import (
    NoiseEstimate,
    default_alpha,
    estimate_beta,
    estimate_sigma_finite_rank,
    estimate_sigma_smoothed,
)
from .filters import (
    FilterPolicy,
    FilterSpec,
    FittedValues,
    OracleDecomposition,
    empirical_risk_full,
    expected_empirical_risk_full,
    expected_smoothed_risk,
    fit_at_time,
    oracle_decomposition,
    predict,
    residual_factor,
    shrinkage_gamma,
    smoothed_reduced_risk,
)
from .kernels import (
    DesignSample,
    EigenSystem,
    KernelKind,
    RotatedSample,
    build_gram,
    eigensystem,
    eval_kernel,
    gaussian,
    kernel_cross,
    laplace,
    polynomial,
    rotate,
    sobolev_min,
)
from .simulate import (
    TARGET_NAMES,
    ExperimentConfig,
    ExperimentReport,
    RegressionFunction,
    RuleSetting,
    RuleSummary,
    TrialRecord,
    config_from_mapping,
    emit_curves,
    generate_dataset,
    run_experiment,
    run_trial,
    splitmix64,
    tabulated_target,
    target_function,
    trial_seed,
)
from .stopping import (
    RULE_NAMES,
    StoppingOutcome,
    balancing_stop,
    holdout_stop,
    mdp_stop,
    oracle_stop,
    run_stopping_rule,
    rwy_stop,
    theoretical_mdp_stop,
    vfold_stop,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionAudit",
    "CriticalRadiusResult",
    "DesignSample",
    "EigenSystem",
    "ExperimentConfig",
    "ExperimentReport",
    "FilterPolicy",
    "FilterSpec",
    "FittedValues",
    "KernelKind",
    "NoiseEstimate",
    "OracleDecomposition",
    "RULE_NAMES",
    "RegressionFunction",
    "RotatedSample",
    "RuleSetting",
    "RuleSummary",
    "StoppingOutcome",
    "TARGET_NAMES",
    "TrialRecord",
    "assumption_audit",
    "balancing_stop",
    "build_gram",
    "config_from_mapping",
    "critical_radius",
    "default_alpha",
    "eigensystem",
    "emit_curves",
    "empirical_risk_full",
    "estimate_beta",
    "estimate_sigma_finite_rank",
    "estimate_sigma_smoothed",
    "eval_kernel",
    "expected_empirical_risk_full",
    "expected_smoothed_risk",
    "fit_at_time",
    "gaussian",
    "generate_dataset",
    "holdout_stop",
    "kernel_complexity",
    "kernel_cross",
    "laplace",
    "mdp_stop",
    "oracle_decomposition",
    "oracle_stop",
    "polynomial",
    "predict",
    "residual_factor",
    "rotate",
    "run_experiment",
    "run_stopping_rule",
    "run_trial",
    "rwy_stop",
    "shrinkage_gamma",
    "smoothed_reduced_risk",
    "sobolev_min",
    "splitmix64",
    "statistical_dimension",
    "tabulated_target",
    "target_function",
    "theoretical_mdp_stop",
    "trial_seed",
    "vfold_stop",
]
