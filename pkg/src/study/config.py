"""
Study Configuration
Pydantic models of a convergence study and its admissibility checks
"""

from dataclasses import dataclass, field
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..core import settings
from ..core.base_law import BasePressureLaw
from ..core.errors import ConfigError, LabError
from ..core.law_factory import LawFactory
from ..diagnostics.relent import epsilon_one
from ..fields.grid import MIN_CELLS, Boundary, GridSpec
from ..solvers.cns import ScalingParams

logger = logging.getLogger(__name__)


# ============================================================================
# MODELS
# ============================================================================

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PowerLawSpec(_Strict):
    variant: Literal["power"] = "power"
    a: float = Field(gt=0)
    gamma: float = Field(ge=1)
    beta: float = Field(gt=2.5)
    rho_bar: float = Field(gt=0)


class CarnahanStarlingSpec(_Strict):
    variant: Literal["cs"] = "cs"
    kT: float = Field(gt=0)
    rho_bar: float = Field(gt=0)


LawSpec = Annotated[Union[PowerLawSpec, CarnahanStarlingSpec], Field(discriminator="variant")]


class PathRule(_Strict):
    """nu(eps) = eps^nu_exponent and R(eps) = R0 eps^-R_exponent"""

    nu_exponent: float = 2.0 / 3.0
    R0: float = Field(default=0.5, gt=0)
    R_exponent: float = 1.5

    def nu(self, eps: float) -> float:
        return eps**self.nu_exponent

    def R(self, eps: float) -> float:
        return self.R0 * eps ** (-self.R_exponent)


class DataSpec(_Strict):
    """Amplitudes of the limit data, all supported in the ball of radius D"""

    density_amplitude: float = 0.0
    potential_amplitude: float = 0.0
    vortex: Literal["none", "taylor-green", "compact-vortex", "random"] = "none"
    vortex_amplitude: float = 0.0
    order: float = Field(default=2.0, gt=0)


class PerturbationSpec(_Strict):
    """Ill-prepared offsets of size amplitude x eps^exponent"""

    density: float = 0.0
    velocity: float = 0.0
    exponent: float = Field(default=1.0, ge=0)


class RenormSpec(_Strict):
    """Onset alpha1 of the barrier renormalization; None takes it from the certificate"""

    alpha1: float | None = Field(default=None, gt=0)


class Tolerances(_Strict):
    rei: float = Field(default=1e-2, ge=0)
    rei_abs: float = Field(default=1e-10, ge=0)
    pairs: float = Field(default=5e-2, ge=0)


class StudyConfig(_Strict):
    """A sweep over Mach numbers along one admissible path"""

    scenario: str
    law: LawSpec
    eps: list[float] = Field(min_length=1)
    eps0: float = Field(gt=0)
    path: PathRule = PathRule()
    dim: Literal[1, 2] = 1
    cells: int = Field(ge=2 * MIN_CELLS)
    D: float = Field(gt=0)
    varrho: float = Field(gt=0)
    T: float = Field(gt=0)
    mu: float = Field(default=1.0, gt=0)
    emit_dt: float = Field(gt=0)
    shell_cells: int = Field(default=8, ge=4)
    alpha: float = Field(default=1.0 / 3.0, gt=0, lt=1)
    cfl: float = Field(default=0.4, gt=0)
    integrator: Literal["rk2", "rk3"] = "rk3"
    data: DataSpec = DataSpec()
    perturbation: PerturbationSpec = PerturbationSpec()
    renorm: RenormSpec | None = None
    tolerances: Tolerances = Tolerances()
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    seed: int = 0

    @field_validator("eps")
    @classmethod
    def _descending(cls, values: list[float]) -> list[float]:
        if any(not v > 0 for v in values):
            raise ValueError(f"Every eps must be positive, got {values}")
        if any(b >= a for a, b in zip(values, values[1:])):
            raise ValueError(f"eps must be strictly descending, got {values}")
        return values

    @field_validator("cells")
    @classmethod
    def _even(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"cells must be even so every sweep box sits centered, got {value}")
        return value

    def build_law(self) -> BasePressureLaw:
        return LawFactory.create(self.law.model_dump())

    def digest(self) -> str:
        """sha256 of the canonical JSON form"""
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_config(source, **overrides) -> StudyConfig:
    """
    Parse a study configuration from a path or a mapping

    Args:
        source: JSON file path or dict
        **overrides: Top-level fields replaced before validation (seed, output_dir, cells)

    Raises:
        ConfigError: If the file is unreadable or the schema rejects it
    """
    if isinstance(source, (str, Path)):
        try:
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config {source}: {e}")
    else:
        data = dict(source)
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return StudyConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid study config: {e}")


# ============================================================================
# SWEEP GEOMETRY
# ============================================================================

@dataclass(frozen=True)
class SweepPoint:
    """One Mach number with its viscosity, radius and box"""

    eps: float
    nu: float
    R: float
    extent: float
    cells: int

    def grid(self, dim: int, boundary=Boundary.NOSLIP) -> GridSpec:
        return GridSpec.cube(dim, self.extent, self.cells, boundary)

    def params(self, config: StudyConfig) -> ScalingParams:
        return ScalingParams(
            eps=self.eps,
            nu=self.nu,
            R=self.extent,
            D=config.D,
            varrho=config.varrho,
            T=config.T,
            mu=config.mu,
        )

    def to_dict(self) -> dict:
        return {"eps": self.eps, "nu": self.nu, "R": self.R, "extent": self.extent, "cells": self.cells}


def sweep_points(config: StudyConfig) -> list[SweepPoint]:
    """
    Boxes of one common spacing, the largest with config.cells cells per axis

    Each box has an even cell count closest to 2 R(eps) / h so that it sits
    centered inside the largest one.
    """
    largest = max(config.path.R(e) for e in config.eps)
    h = 2.0 * largest / config.cells
    points = []
    for eps in config.eps:
        R = config.path.R(eps)
        cells = min(config.cells, 2 * max(1, round(R / h)))
        points.append(SweepPoint(eps=eps, nu=config.path.nu(eps), R=R, extent=0.5 * cells * h, cells=cells))
    return points


def largest_grid(config: StudyConfig) -> GridSpec:
    """Periodic box shared by the Euler solve"""
    largest = max(config.path.R(e) for e in config.eps)
    return GridSpec.cube(config.dim, largest, config.cells, Boundary.PERIODIC)


# ============================================================================
# VALIDATION
# ============================================================================

@dataclass
class ValidatedStudy:
    """A configuration whose admissibility inequalities all hold"""

    config: StudyConfig
    points: list[SweepPoint]
    eps1: float
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config.model_dump(mode="json"),
            "config_hash": self.config.digest(),
            "points": [p.to_dict() for p in self.points],
            "eps1": self.eps1 if math.isfinite(self.eps1) else None,
            "checks": self.checks,
        }


def _path_checks(path: PathRule) -> dict:
    return {
        "path rule: R(eps) must diverge": path.R_exponent > 0.0,
        "path rule: eps R(eps) must diverge": path.R_exponent > 1.0,
        "path rule: nu(eps) must vanish": path.nu_exponent > 0.0,
        "path rule: eps / nu(eps) must vanish": path.nu_exponent < 1.0,
    }


def validate_config(config: StudyConfig, sup_s: float | None = None) -> ValidatedStudy:
    """
    Check every admissibility inequality of a study

    Checked: the path rules, 1/D < varrho - eps0 D and varrho + eps0 D < rho_bar,
    the initial data bound |u0_eps|_L2 + |rho1_eps|_L2 + |rho1_eps|_Linf <= D on the
    perturbed data of every sweep point, the radius condition R > D + sqrt(p'(varrho)) T / eps
    at every sweep point, the shell width, and eps < min(eps0, eps1) with
    eps1 = min(rho_bar - varrho, varrho) / sup|s| from the measured acoustic
    sup-norm.

    Args:
        config: Parsed configuration
        sup_s: Measured sup|s| over the horizon; None solves the acoustic
            system of the smallest eps to obtain it

    Returns:
        ValidatedStudy with the check table

    Raises:
        ConfigError: Naming every violated inequality
    """
    from .scenarios import ScenarioFactory

    checks: dict[str, bool] = dict(_path_checks(config.path))
    try:
        law = config.build_law()
        scenario = ScenarioFactory.create(config.scenario, config)
    except (LabError, ValueError) as e:
        raise ConfigError(f"Cannot build the study: {e}")

    checks["scenario dimension matches dim"] = scenario.DIMENSION in (None, config.dim)
    lo, hi = config.varrho - config.eps0 * config.D, config.varrho + config.eps0 * config.D
    checks["data ceiling: 1/D < varrho - eps0 D"] = 1.0 / config.D < lo
    checks["data ceiling: varrho + eps0 D < rho_bar"] = hi < law.rho_bar

    points = sweep_points(config)
    c_p, _ = law.pressure_derivatives(config.varrho)

    for p in points:
        reach = config.D + math.sqrt(c_p) * config.T / p.eps
        checks[f"radius condition at eps={p.eps:g}: R > D + sqrt(p'(varrho)) T / eps"] = p.extent > reach
        checks[f"box at eps={p.eps:g} has at least {MIN_CELLS} cells"] = p.cells >= MIN_CELLS
        h = 2.0 * p.extent / max(p.cells, 1)
        checks[f"shell at eps={p.eps:g} fits inside the box"] = config.shell_cells * h < p.extent
        if p.cells >= MIN_CELLS:
            norms = scenario.data_norms(p.grid(config.dim, Boundary.PERIODIC), p.eps)
            total = norms["u_l2"] + norms["rho_l2"] + norms["rho_sup"]
            name = f"initial data bound at eps={p.eps:g}: |u0|_L2 + |rho1|_L2 + |rho1|_Linf = {total:.4g} <= D"
            checks[name] = total <= config.D

    if sup_s is None:
        sup_s = scenario.acoustic_sup(law, points[-1]) if all(checks.values()) else 0.0
    eps1 = epsilon_one(law.rho_bar, config.varrho, sup_s)
    ceiling = min(config.eps0, eps1)
    for eps in config.eps:
        checks[f"eps={eps:g} < min(eps0, eps1) = {ceiling:.4g}"] = eps < ceiling

    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        raise ConfigError("; ".join(failed))
    logger.info(f"Study config {config.scenario} validated: {len(points)} points, eps1={eps1:.4g}")
    return ValidatedStudy(
        config=config,
        points=points,
        eps1=float(eps1),
        checks={name: bool(ok) for name, ok in checks.items()},
    )
