"""Risk-sensitive multi-agent actor-critic under cumulative prospect theory."""

from ._cptmarl import (
    CptParams,
    DiagnosticError,
    FixedPointResult,
    GameSpec,
    PolicyGradient,
    PolicyTable,
    SigmaDistribution,
    TrainingResult,
    WeightingFamily,
    check_contraction,
    cpt_estimate,
    cpt_exact,
    generate_experiment,
    grad_value,
    gradient_check,
    run_scenarios,
    solve_fixed_point,
    td_apply,
    train,
    train_from_config,
    utility,
    weight,
)

__all__ = [
    "CptParams",
    "DiagnosticError",
    "FixedPointResult",
    "GameSpec",
    "PolicyGradient",
    "PolicyTable",
    "SigmaDistribution",
    "TrainingResult",
    "WeightingFamily",
    "check_contraction",
    "cpt_estimate",
    "cpt_exact",
    "generate_experiment",
    "grad_value",
    "gradient_check",
    "run_scenarios",
    "solve_fixed_point",
    "td_apply",
    "train",
    "train_from_config",
    "utility",
    "weight",
]
