"""Study configuration, scenarios, sweep runner, rate reports and self-checks"""

from .checks import list_checks, register_check, run_checks
from .config import (
    StudyConfig,
    SweepPoint,
    ValidatedStudy,
    largest_grid,
    load_config,
    sweep_points,
    validate_config,
)
from .rates import RATE_COLUMNS, RateFit, RateReport, RateRow, fit_rate, summarize
from .runner import PointResult, emit_outputs, load_rates, run_point, run_study, shared_euler
from .scenarios import BaseScenario, InitialData, ScenarioFactory

__all__ = [
    "list_checks",
    "register_check",
    "run_checks",
    "StudyConfig",
    "SweepPoint",
    "ValidatedStudy",
    "largest_grid",
    "load_config",
    "sweep_points",
    "validate_config",
    "RATE_COLUMNS",
    "RateFit",
    "RateReport",
    "RateRow",
    "fit_rate",
    "summarize",
    "PointResult",
    "emit_outputs",
    "load_rates",
    "run_point",
    "run_study",
    "shared_euler",
    "BaseScenario",
    "InitialData",
    "ScenarioFactory",
]
