"""
Scenario Library
Initial-data recipes of the convergence studies and their registry
"""

from abc import ABC
from dataclasses import dataclass
import logging
from typing import Type

import numpy as np

from ..core.base_law import BasePressureLaw
from ..core.errors import ConfigError
from ..fields.grid import Boundary, GridSpec, ScalarField, VectorField
from ..fields.operators import compact_bump, grad
from ..solvers.acoustics import AcousticParams, solve_acoustic
from ..solvers.euler import compact_vortex, random_band_limited, taylor_green
from .config import StudyConfig, SweepPoint

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InitialData:
    """Limit data (rho1, Psi_0, v_0) sampled on a periodic box"""

    rho1: ScalarField
    psi0: ScalarField
    v0: VectorField | None = None

    @property
    def grid(self) -> GridSpec:
        return self.rho1.grid

    @property
    def grad_psi0(self) -> VectorField:
        return grad(self.psi0)

    @property
    def has_velocity(self) -> bool:
        return bool(np.any(self.psi0.values)) or self.v0 is not None

    def velocity(self) -> VectorField:
        """u_0 = v_0 + grad Psi_0"""
        u = self.grad_psi0
        return u + self.v0 if self.v0 is not None else u


class BaseScenario(ABC):
    """
    Base class of an initial-data recipe

    The density perturbation and the acoustic potential are compact bumps of
    radius D scaled by the data amplitudes; the Euler velocity follows
    config.data.vortex. Subclasses pin the dimension, supply defaults and
    reject configurations their purpose excludes.
    """

    NAME: str = ""
    DIMENSION: int | None = None
    DEFAULTS: dict = {}

    def __init__(self, config: StudyConfig):
        self.config = config
        self.check()

    def check(self) -> None:
        """Scenario-specific configuration requirements"""

    def _bump(self, grid: GridSpec, radius: float) -> np.ndarray:
        return compact_bump(grid.radius(), radius, self.config.data.order)

    def density(self, grid: GridSpec) -> ScalarField:
        return ScalarField(grid, self.config.data.density_amplitude * self._bump(grid, self.config.D))

    def potential(self, grid: GridSpec) -> ScalarField:
        return ScalarField(grid, self.config.data.potential_amplitude * self._bump(grid, self.config.D))

    def vortex(self, grid: GridSpec) -> VectorField | None:
        """Euler initial velocity on the largest periodic box"""
        data = self.config.data
        if data.vortex == "none" or grid.dim != 2:
            return None
        if data.vortex == "taylor-green":
            return taylor_green(grid, amplitude=data.vortex_amplitude)
        if data.vortex == "compact-vortex":
            return compact_vortex(grid, self.config.D, amplitude=data.vortex_amplitude, order=data.order)
        return random_band_limited(grid, seed=self.config.seed, amplitude=data.vortex_amplitude)

    def initial_data(self, grid: GridSpec, vortex_grid: GridSpec | None = None) -> InitialData:
        """
        Limit data on a periodic grid

        Args:
            grid: Periodic grid of the acoustic data
            vortex_grid: Periodic grid of the Euler data (default: grid)
        """
        return InitialData(
            rho1=self.density(grid),
            psi0=self.potential(grid),
            v0=self.vortex(vortex_grid or grid),
        )

    def offsets(self, grid: GridSpec, eps: float) -> tuple[ScalarField, VectorField]:
        """Ill-prepared offsets (rho1_eps - rho1, u0_eps - u0) on a periodic grid"""
        pert = self.config.perturbation
        scale = eps**pert.exponent
        bump = self._bump(grid, 0.5 * self.config.D)
        drho = ScalarField(grid, pert.density * scale * bump)
        du = grad(ScalarField(grid, pert.velocity * scale * bump))
        return drho, du

    def data_norms(self, grid: GridSpec, eps: float) -> dict:
        """
        Norms of the perturbed data u0_eps = u0 + du and rho1_eps = rho1 + drho

        Returns:
            Dictionary with u_l2, rho_l2 and rho_sup on the periodic grid
        """
        data = self.initial_data(grid)
        drho, du = self.offsets(grid, eps)
        rho1 = data.rho1 + drho
        u0 = data.velocity() + du
        return {"u_l2": u0.norm(2), "rho_l2": rho1.norm(2), "rho_sup": rho1.norm(np.inf)}

    def acoustic_sup(self, law: BasePressureLaw, point: SweepPoint) -> float:
        """sup |s| over the horizon, measured on the periodic box of a sweep point"""
        grid = point.grid(self.config.dim, Boundary.PERIODIC)
        data = self.initial_data(grid)
        params = AcousticParams.from_law(law, point.eps, self.config.varrho)
        trajectory = solve_acoustic(data.rho1, data.grad_psi0, params, self.config.T, self.config.emit_dt)
        return max(state.s.norm(np.inf) for state in trajectory)

    @classmethod
    def default_config(cls) -> dict:
        return {"scenario": cls.NAME, **cls.DEFAULTS}


_REFERENCE_LAW = {"variant": "power", "a": 0.45, "gamma": 2.0, "beta": 3.0, "rho_bar": 3.0}


class EquilibriumScenario(BaseScenario):
    """Constant state (varrho, 0); every gap, remainder and rate vanishes"""

    NAME = "equilibrium"
    DEFAULTS = {
        "law": _REFERENCE_LAW,
        "eps": [0.2, 0.1, 0.05],
        "eps0": 0.25,
        "dim": 1,
        "cells": 256,
        "D": 2.0,
        "varrho": 1.5,
        "T": 0.5,
        "emit_dt": 0.05,
    }

    def density(self, grid: GridSpec) -> ScalarField:
        return ScalarField.zeros(grid)

    def potential(self, grid: GridSpec) -> ScalarField:
        return ScalarField.zeros(grid)

    def vortex(self, grid: GridSpec) -> VectorField | None:
        return None


class AcousticPulseScenario(BaseScenario):
    """1D compact density and potential pulse; the reference convergence study"""

    NAME = "acoustic-pulse-1d"
    DIMENSION = 1
    DEFAULTS = {
        "law": _REFERENCE_LAW,
        "eps": [0.2, 0.1, 0.05],
        "eps0": 0.25,
        "path": {"nu_exponent": 2.0 / 3.0, "R0": 0.5, "R_exponent": 1.5},
        "dim": 1,
        "cells": 1024,
        "D": 2.0,
        "varrho": 1.5,
        "T": 0.5,
        "emit_dt": 0.025,
        "data": {"density_amplitude": 0.5, "potential_amplitude": 0.25},
    }


class TaylorGreenCoupledScenario(BaseScenario):
    """2D Taylor-Green vortex carried through an acoustic pulse"""

    NAME = "taylor-green-coupled-2d"
    DIMENSION = 2
    DEFAULTS = {
        "law": _REFERENCE_LAW,
        "eps": [0.4, 0.3, 0.2],
        "eps0": 0.45,
        "path": {"nu_exponent": 2.0 / 3.0, "R0": 1.5, "R_exponent": 1.5},
        "dim": 2,
        "cells": 192,
        "D": 2.0,
        "varrho": 1.5,
        "T": 0.2,
        "emit_dt": 0.02,
        "data": {
            "density_amplitude": 0.4,
            "potential_amplitude": 0.2,
            "vortex": "taylor-green",
            "vortex_amplitude": 0.1,
        },
    }

    def check(self) -> None:
        if self.config.data.vortex != "taylor-green":
            raise ConfigError(f"{self.NAME} needs data.vortex = 'taylor-green', got {self.config.data.vortex!r}")


class NearBarrierScenario(BaseScenario):
    """Dense bump close to the packing density; the renormalization b(rho) is active"""

    NAME = "near-barrier-bump"
    DIMENSION = 1
    DEFAULTS = {
        "law": _REFERENCE_LAW,
        "eps": [0.2, 0.1, 0.05],
        "eps0": 0.25,
        "path": {"nu_exponent": 2.0 / 3.0, "R0": 1.0, "R_exponent": 1.5},
        "dim": 1,
        "cells": 2048,
        "D": 1.2,
        "varrho": 2.5,
        "T": 0.1,
        "emit_dt": 0.005,
        "data": {"density_amplitude": 0.55},
        "renorm": {"alpha1": 0.6},
    }

    def check(self) -> None:
        if self.config.renorm is None:
            raise ConfigError(f"{self.NAME} needs a renorm section")


class ScenarioFactory:
    """Factory for creating scenarios from their registered names"""

    _registry: dict[str, Type[BaseScenario]] = {}

    @classmethod
    def register(cls, name: str, scenario_class: Type[BaseScenario]) -> None:
        """
        Register a scenario

        Args:
            name: Scenario name used in configs (e.g., 'acoustic-pulse-1d')
            scenario_class: Class that inherits from BaseScenario
        """
        cls._registry[name.lower()] = scenario_class

    @classmethod
    def _lookup(cls, name: str) -> Type[BaseScenario]:
        scenario_class = cls._registry.get(str(name).lower())
        if not scenario_class:
            raise ConfigError(f"Scenario '{name}' not found. Available scenarios: {cls.list_scenarios()}")
        return scenario_class

    @classmethod
    def create(cls, name: str, config: StudyConfig) -> BaseScenario:
        """
        Create a scenario bound to a study configuration

        Raises:
            ConfigError: If the scenario is unknown or rejects the configuration
        """
        return cls._lookup(name)(config)

    @classmethod
    def list_scenarios(cls) -> list[str]:
        return list(cls._registry.keys())

    @classmethod
    def get_scenario_info(cls, name: str) -> dict:
        """
        Get information about a registered scenario

        Returns:
            Dictionary with the name, dimension, description and default config
        """
        scenario_class = cls._lookup(name)
        return {
            "name": scenario_class.NAME,
            "class": scenario_class.__name__,
            "dimension": scenario_class.DIMENSION,
            "description": (scenario_class.__doc__ or "No description available").strip(),
            "default_config": scenario_class.default_config(),
        }


ScenarioFactory.register(EquilibriumScenario.NAME, EquilibriumScenario)
ScenarioFactory.register(AcousticPulseScenario.NAME, AcousticPulseScenario)
ScenarioFactory.register(TaylorGreenCoupledScenario.NAME, TaylorGreenCoupledScenario)
ScenarioFactory.register(NearBarrierScenario.NAME, NearBarrierScenario)
