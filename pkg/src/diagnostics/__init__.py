"""Weak-solution diagnostics and the relative entropy machinery"""

from .relent import (
    ComparisonFields,
    MeanPressureReport,
    RateConstants,
    RelEntropyReport,
    build_corrector,
    calibrate_constants,
    cancellation_pairs,
    comparison_trajectory,
    corrector_norms,
    epsilon_one,
    gronwall_bound,
    gronwall_delta,
    gronwall_gamma,
    initial_entropy_bound,
    limit_distance,
    mean_pressure_estimate,
    rate_bound_rhs,
    rei_check,
    relative_entropy,
)
from .weak_solution import (
    LinearizationFit,
    TestFunction,
    UniformEstimates,
    default_test_family,
    energy_inequality_residual,
    fit_power,
    linearization_exponent,
    momentum_weak_residual,
    renormalized_residual,
    uniform_estimates,
)

__all__ = [
    "ComparisonFields",
    "MeanPressureReport",
    "RateConstants",
    "RelEntropyReport",
    "build_corrector",
    "calibrate_constants",
    "cancellation_pairs",
    "comparison_trajectory",
    "corrector_norms",
    "epsilon_one",
    "gronwall_bound",
    "gronwall_delta",
    "gronwall_gamma",
    "initial_entropy_bound",
    "limit_distance",
    "mean_pressure_estimate",
    "rate_bound_rhs",
    "rei_check",
    "relative_entropy",
    "LinearizationFit",
    "TestFunction",
    "UniformEstimates",
    "default_test_family",
    "energy_inequality_residual",
    "fit_power",
    "linearization_exponent",
    "momentum_weak_residual",
    "renormalized_residual",
    "uniform_estimates",
]
