"""
Hardsphere Lab - Low Mach Number Limit Laboratory

Solvers and diagnostics for the singular limit of compressible viscous flow
with a hard-sphere pressure law: acoustic, incompressible Euler and
compressible Navier-Stokes solvers, relative-entropy bookkeeping and
convergence studies along admissible parameter paths.
"""

__version__ = "0.1.0"
__license__ = "MIT"

from .core.base_law import BasePressureLaw
from .core.law_factory import LawFactory
from .study.scenarios import BaseScenario, ScenarioFactory

__all__ = [
    "BasePressureLaw",
    "LawFactory",
    "BaseScenario",
    "ScenarioFactory",
]
