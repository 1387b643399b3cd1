"""
Compressible Navier-Stokes
Scaled primitive system with a hard-sphere pressure on a no-slip MAC grid
"""

from dataclasses import dataclass, asdict
import logging
import math

import numpy as np
import pandas as pd

from ..core.base_law import BasePressureLaw
from ..core.errors import CFLError, DensityError, GridError, GridMismatch, ParameterError
from ..eos.lemmas import relative_potential
from ..fields.grid import GridSpec, ScalarField, VectorField
from ..fields.operators import bulk_factor, center_gradient, div, grad
from .timeline import emission_times, substeps

logger = logging.getLogger(__name__)

ACOUSTIC_CFL = 0.4
VISCOUS_CFL = 0.4
DENSITY_MARGIN = 1e-6
INTEGRATORS = ("rk2", "rk3")

# stage weights of the rate integrals: Heun and three-stage SSP
_STAGE_WEIGHTS = {"rk2": (0.5, 0.5), "rk3": (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)}


@dataclass(frozen=True)
class ScalingParams:
    """Mach number, viscosity scale, radii, background density, horizon and shear coefficient"""

    eps: float
    nu: float
    R: float
    D: float
    varrho: float
    T: float
    mu: float = 1.0

    def __post_init__(self):
        for name in ("eps", "nu", "R", "D", "varrho", "mu"):
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"Scaling parameter {name} must be positive, got {getattr(self, name)}")
        if not self.T >= 0.0:
            raise ParameterError(f"Horizon T must be nonnegative, got {self.T}")

    def check_data_ceiling(self, law: BasePressureLaw, eps0: float) -> None:
        """
        Require 1/D < varrho - eps0 D and varrho + eps0 D < rho_bar

        Raises:
            ParameterError: If either inequality fails
        """
        lo, hi = self.varrho - eps0 * self.D, self.varrho + eps0 * self.D
        if not 1.0 / self.D < lo:
            raise ParameterError(f"Need 1/D = {1.0 / self.D:.4g} < varrho - eps0 D = {lo:.4g}")
        if not hi < law.rho_bar:
            raise ParameterError(f"Need varrho + eps0 D = {hi:.4g} < rho_bar = {law.rho_bar:.4g}")

    def check_radius(self, c_p: float) -> None:
        """
        Require R > D + sqrt(p'(varrho)) T / eps so waves stay inside the box

        Raises:
            ParameterError: If the box is too small
        """
        reach = self.D + math.sqrt(c_p) * self.T / self.eps
        if not self.R > reach:
            raise ParameterError(f"Radius R = {self.R:.4g} does not exceed the acoustic reach {reach:.4g}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LedgerRow:
    """Energy ledger at a snapshot; potential is eps^-2 int P(rho), dissipation is cumulative"""

    t: float
    kinetic: float
    potential: float
    potential_relative: float
    dissipation: float
    mass: float

    @property
    def relative_energy(self) -> float:
        return self.kinetic + self.potential_relative


@dataclass(frozen=True, eq=False)
class FluidState:
    rho: ScalarField
    u: VectorField
    t: float
    ledger: LedgerRow

    @property
    def grid(self) -> GridSpec:
        return self.rho.grid


def ledger_frame(trajectory: list[FluidState]) -> pd.DataFrame:
    """ledger.csv rows: t, kinetic, potential, potential_relative, dissipation, mass"""
    return pd.DataFrame([asdict(state.ledger) for state in trajectory])


# ============================================================================
# MAC STENCILS
# ============================================================================

def _interior(axis: int, dim: int, lo: int = 1, hi: int = -1) -> tuple:
    index = [slice(None)] * dim
    index[axis] = slice(lo, hi)
    return tuple(index)


def face_average(values: np.ndarray, axis: int) -> np.ndarray:
    """Centered samples averaged onto the faces normal to axis; wall faces copy the edge cell"""
    first = np.take(values, [0], axis=axis)
    last = np.take(values, [-1], axis=axis)
    n = values.shape[axis]
    lo = np.take(values, np.arange(n - 1), axis=axis)
    hi = np.take(values, np.arange(1, n), axis=axis)
    return np.concatenate([first, 0.5 * (lo + hi), last], axis=axis)


def _face_to_center(comp: np.ndarray, axis: int) -> np.ndarray:
    n = comp.shape[axis]
    return 0.5 * (np.take(comp, np.arange(n - 1), axis=axis) + np.take(comp, np.arange(1, n), axis=axis))


def _advection(u: VectorField) -> tuple[np.ndarray, ...]:
    """Centered (u . grad) u_i on the interior faces of every component"""
    grid = u.grid
    d = grid.dim
    out = []
    for i, ui in enumerate(u.components):
        inner = _interior(i, d)
        h = grid.spacing[i]
        normal = (np.take(ui, np.arange(2, ui.shape[i]), axis=i) - np.take(ui, np.arange(ui.shape[i] - 2), axis=i)) / (2.0 * h)
        total = ui[inner] * normal
        for j, uj in enumerate(u.components):
            if j == i:
                continue
            uj_centers = _face_to_center(uj, j)
            uj_faces = _face_to_center(uj_centers, i)
            dj = center_gradient(ui, grid, j, wall_value_zero=True)[inner]
            total = total + uj_faces * dj
        adv = np.zeros_like(ui)
        adv[inner] = total
        out.append(adv)
    return tuple(out)


def _face_laplacian(u: VectorField) -> tuple[np.ndarray, ...]:
    """Componentwise Dirichlet Laplacian on the MAC faces, zero on the wall faces"""
    grid = u.grid
    d = grid.dim
    out = []
    for i, ui in enumerate(u.components):
        lap = np.zeros_like(ui)
        for j, h in enumerate(grid.spacing):
            if j == i:
                n = ui.shape[i]
                lap[_interior(i, d)] += (
                    np.take(ui, np.arange(2, n), axis=i)
                    - 2.0 * np.take(ui, np.arange(1, n - 1), axis=i)
                    + np.take(ui, np.arange(n - 2), axis=i)
                ) / h**2
            else:
                first = np.take(ui, [0], axis=j)
                last = np.take(ui, [-1], axis=j)
                padded = np.concatenate([-first, ui, -last], axis=j)
                n = ui.shape[j]
                lap += (
                    np.take(padded, np.arange(2, n + 2), axis=j)
                    - 2.0 * ui
                    + np.take(padded, np.arange(n), axis=j)
                ) / h**2
        lap[tuple(_wall_index(i, d, 0))] = 0.0
        lap[tuple(_wall_index(i, d, -1))] = 0.0
        out.append(lap)
    return tuple(out)


def _wall_index(axis: int, dim: int, end: int) -> list:
    index = [slice(None)] * dim
    index[axis] = end
    return index


def viscous_force(u: VectorField, mu: float) -> VectorField:
    """
    Discrete div S(grad u) = mu (lap u + (1 - c) grad div u) on a no-slip grid

    The operator is symmetric and negative semidefinite, so -<u, force>
    is the discrete dissipation mu (||grad u||^2 + (1 - c) ||div u||^2).
    """
    grid = u.grid
    c = bulk_factor(grid.dim)
    lap = _face_laplacian(u)
    graddiv = grad(div(u)).components
    return VectorField.with_walls(
        grid, tuple(mu * (a + (1.0 - c) * b) for a, b in zip(lap, graddiv))
    )


# ============================================================================
# SOLVER
# ============================================================================

class _CompressibleSystem:
    """Semi-discrete right-hand side of the scaled system"""

    def __init__(self, law: BasePressureLaw, params: ScalingParams, grid: GridSpec, forcing: VectorField | None):
        self.law = law
        self.params = params
        self.grid = grid
        self.forcing = forcing
        self.floor = DENSITY_MARGIN * law.rho_bar
        self.ceiling = law.rho_bar - DENSITY_MARGIN * law.rho_bar

    def check_density(self, rho: np.ndarray, t: float) -> None:
        if not np.all(np.isfinite(rho)):
            raise DensityError(f"Density is not finite at t={t:.6g}")
        lo, hi = float(np.min(rho)), float(np.max(rho))
        if lo < self.floor or hi > self.ceiling:
            raise DensityError(
                f"Density range [{lo:.6g}, {hi:.6g}] left [{self.floor:.3g}, {self.ceiling:.6g}] at t={t:.6g}"
            )

    def mass_flux(self, rho: np.ndarray, u: VectorField) -> VectorField:
        """Upwind rho u on every face; wall faces carry no flux"""
        comps = []
        for axis, ui in enumerate(u.components):
            n = rho.shape[axis]
            left = np.take(rho, np.arange(n - 1), axis=axis)
            right = np.take(rho, np.arange(1, n), axis=axis)
            inner = ui[_interior(axis, self.grid.dim)]
            flux = np.zeros_like(ui)
            flux[_interior(axis, self.grid.dim)] = np.where(inner >= 0.0, left, right) * inner
            comps.append(flux)
        return VectorField(self.grid, tuple(comps))

    def __call__(self, rho: np.ndarray, u: VectorField):
        grid = self.grid
        prm = self.params
        drho = -div(self.mass_flux(rho, u)).values
        dP, _ = self.law.potential_derivatives(rho)
        pressure = grad(ScalarField(grid, dP)).components
        visc = viscous_force(u, prm.mu)
        adv = _advection(u)
        du = []
        for axis, ui in enumerate(u.components):
            rho_f = face_average(rho, axis)
            rate = -adv[axis] - pressure[axis] / prm.eps**2 + prm.nu * visc.components[axis] / rho_f
            if self.forcing is not None:
                rate = rate + self.forcing.components[axis]
            du.append(rate)
        dissipation = -prm.nu * u.inner(visc)
        return drho, VectorField.with_walls(grid, du), dissipation

    def stable_step(self, rho: np.ndarray, u: VectorField, cfl: float) -> float:
        grid = self.grid
        prm = self.params
        dp, _ = self.law.pressure_derivatives(rho)
        sound = math.sqrt(max(float(np.max(dp)), 0.0)) / prm.eps
        speed = sound + u.sup()
        acoustic = cfl * grid.h / (speed * math.sqrt(grid.dim)) if speed > 0 else math.inf
        c = bulk_factor(grid.dim)
        viscous = VISCOUS_CFL * grid.h**2 * float(np.min(rho)) / (prm.nu * prm.mu * (2.0 - c) * grid.dim)
        return min(acoustic, viscous)

    def ledger(self, rho: np.ndarray, u: VectorField, t: float, dissipation: float) -> LedgerRow:
        grid = self.grid
        prm = self.params
        kinetic = 0.5 * sum(
            float(np.sum(face_average(rho, axis) * ui**2)) for axis, ui in enumerate(u.components)
        ) * grid.cell_volume
        potential = float(np.sum(self.law.potential(rho))) * grid.cell_volume / prm.eps**2
        relative = float(np.sum(relative_potential(self.law, rho, prm.varrho))) * grid.cell_volume / prm.eps**2
        return LedgerRow(
            t=float(t),
            kinetic=kinetic,
            potential=potential,
            potential_relative=relative,
            dissipation=float(dissipation),
            mass=float(np.sum(rho)) * grid.cell_volume,
        )


def _advance(system: _CompressibleSystem, rho, u, dt, integrator: str, t: float):
    """One SSP Runge-Kutta step; returns the new state and the dissipated energy"""
    weights = _STAGE_WEIGHTS[integrator]
    rates = []

    drho, du, diss = system(rho, u)
    rates.append(diss)
    rho1 = rho + dt * drho
    u1 = u + du * dt
    system.check_density(rho1, t + dt)
    drho1, du1, diss1 = system(rho1, u1)
    rates.append(diss1)
    if integrator == "rk2":
        rho_new = 0.5 * rho + 0.5 * (rho1 + dt * drho1)
        u_new = u * 0.5 + (u1 + du1 * dt) * 0.5
    else:
        rho2 = 0.75 * rho + 0.25 * (rho1 + dt * drho1)
        u2 = u * 0.75 + (u1 + du1 * dt) * 0.25
        system.check_density(rho2, t + 0.5 * dt)
        drho2, du2, diss2 = system(rho2, u2)
        rates.append(diss2)
        rho_new = rho / 3.0 + (2.0 / 3.0) * (rho2 + dt * drho2)
        u_new = u * (1.0 / 3.0) + (u2 + du2 * dt) * (2.0 / 3.0)
    system.check_density(rho_new, t + dt)
    dissipated = dt * sum(w * r for w, r in zip(weights, rates))
    return rho_new, u_new, dissipated


def solve_cns(
    rho0: ScalarField,
    u0: VectorField,
    law: BasePressureLaw,
    params: ScalingParams,
    emit_dt: float,
    cfl: float = ACOUSTIC_CFL,
    integrator: str = "rk3",
    forcing: VectorField | None = None,
    dt: float | None = None,
) -> list[FluidState]:
    """
    Solve the scaled compressible Navier-Stokes system on a no-slip box

    Density lives at cell centers and is advanced with upwind mass fluxes,
    so total mass is conserved to rounding. Velocity lives on the MAC faces
    and is advanced with centered advection, the pressure force
    -eps^-2 grad P'(rho) and the viscous force nu div S / rho. The ledger
    accumulates the dissipation with the integrator's own stage weights.
    The stability limit is re-evaluated before every step, and steps land
    exactly on the emission times.

    Args:
        rho0: Initial density on a 1D or 2D no-slip grid
        u0: Initial velocity on the same grid
        law: Pressure law
        params: Scaling parameters; params.T is the horizon
        emit_dt: Emission interval
        cfl: Acoustic CFL number
        integrator: "rk3" (three-stage SSP, default) or "rk2" (Heun)
        forcing: Optional time-independent body force on the faces
        dt: Optional fixed step, checked against the stability limits

    Returns:
        List of FluidState at the emission times

    Raises:
        GridError: Unless the grid is a 1D or 2D no-slip box
        DensityError: If the density leaves [1e-6 rho_bar, (1 - 1e-6) rho_bar]
        CFLError: If a fixed dt exceeds the limits or the limits collapse
    """
    grid = rho0.grid
    if grid.periodic or grid.dim not in (1, 2):
        raise GridError(f"The compressible solver needs a 1D or 2D no-slip grid, got {grid}")
    if u0.grid != grid or (forcing is not None and forcing.grid != grid):
        raise GridMismatch(f"Initial fields live on different grids: {grid} vs {u0.grid}")
    if integrator not in INTEGRATORS:
        raise ParameterError(f"Unknown integrator {integrator!r}, expected one of {INTEGRATORS}")

    system = _CompressibleSystem(law, params, grid, forcing)
    rho = rho0.values.copy()
    u = u0.copy()
    system.check_density(rho, 0.0)

    times = emission_times(params.T, emit_dt)
    dissipation = 0.0
    trajectory = [FluidState(ScalarField(grid, rho.copy()), u.copy(), 0.0, system.ledger(rho, u, 0.0, 0.0))]
    logger.info(
        f"CNS solve on {grid}: eps={params.eps}, nu={params.nu}, T={params.T}, integrator={integrator}"
    )
    steps = 0
    floor = 1e-14 * max(params.T, 1.0)
    for i in range(1, times.size):
        t, target = float(times[i - 1]), float(times[i])
        if dt is not None:
            n, h_t = substeps(target - t, dt)
            for k in range(n):
                limit = system.stable_step(rho, u, cfl)
                if h_t > limit * (1.0 + 1e-12):
                    raise CFLError(f"Step {h_t:.4e} exceeds the stability limit {limit:.4e} at t={t + k * h_t:.6g}")
                rho, u, dissipated = _advance(system, rho, u, h_t, integrator, t + k * h_t)
                dissipation += dissipated
            steps += n
        else:
            while t < target:
                limit = system.stable_step(rho, u, cfl)
                if not limit > floor:
                    raise CFLError(f"Stable step {limit:.3e} collapsed at t={t:.6g}")
                remaining = target - t
                if remaining <= limit * (1.0 + 1e-12):
                    step = remaining
                else:
                    # even split of the last two steps
                    step = min(limit, 0.5 * remaining)
                rho, u, dissipated = _advance(system, rho, u, step, integrator, t)
                dissipation += dissipated
                steps += 1
                t = target if step == remaining else t + step
        trajectory.append(
            FluidState(
                ScalarField(grid, rho.copy()),
                u.copy(),
                float(times[i]),
                system.ledger(rho, u, times[i], dissipation),
            )
        )
    logger.info(f"CNS solve finished after {steps} steps, {len(trajectory)} snapshots")
    return trajectory


def stable_step(
    rho: ScalarField, u: VectorField, law: BasePressureLaw, params: ScalingParams, cfl: float = ACOUSTIC_CFL
) -> float:
    """Largest step allowed by the acoustic and viscous limits at the given state"""
    return _CompressibleSystem(law, params, rho.grid, None).stable_step(rho.values, u, cfl)
