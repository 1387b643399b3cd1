"""
Weak-Solution Diagnostics
Energy inequality, weak continuity and momentum residuals, uniform bounds and linearization
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson
from scipy.stats import linregress

from ..core.base_law import BasePressureLaw
from ..core.errors import FitError, ParameterError
from ..fields.grid import GridSpec, ScalarField, VectorField
from ..fields.operators import div, stress_tensor, velocity_gradient
from ..solvers.cns import FluidState, ScalingParams, solve_cns, stable_step
from ..solvers.timeline import check_synchronized

logger = logging.getLogger(__name__)

LINEARIZATION_AMPLITUDES = (1e-2, 1e-3, 1e-4)
REFERENCE_AMPLITUDE = 1e-6


def time_integral(values, times) -> float:
    """Simpson rule over the snapshot times"""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return 0.0
    return float(simpson(values, x=times))


def cumulative_time_integral(values, times) -> np.ndarray:
    """Running trapezoidal integral, 0 at the first snapshot"""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return np.zeros_like(times)
    return cumulative_trapezoid(values, x=times, initial=0.0)


def energy_inequality_residual(trajectory: list[FluidState]) -> float:
    """
    max_tau [E(tau) + dissipation(tau) - E(0)] / E(0)

    E is the relative energy int 1/2 rho |u|^2 + eps^-2 (P(rho) - P'(varrho)(rho - varrho) - P(varrho)),
    which differs from int 1/2 rho |u|^2 + eps^-2 P(rho) by a constant under
    mass conservation. A zero initial energy leaves the residual unnormalized.
    """
    if not trajectory:
        return 0.0
    e0 = trajectory[0].ledger.relative_energy
    worst = max(s.ledger.relative_energy + s.ledger.dissipation - e0 for s in trajectory)
    return worst / e0 if e0 > 0.0 else worst


# ============================================================================
# TEST FUNCTIONS
# ============================================================================

def _bump_profile(x: np.ndarray, order: float) -> tuple[np.ndarray, np.ndarray]:
    """exp(1 - (1 - x)^-order) and its derivative in x, for x = (r / radius)^2"""
    value = np.zeros_like(x)
    slope = np.zeros_like(x)
    inside = x < 1.0
    gap = 1.0 - x[inside]
    value[inside] = np.exp(1.0 - gap ** (-order))
    slope[inside] = -order * gap ** (-order - 1.0) * value[inside]
    return value, slope


@dataclass(frozen=True)
class TestFunction:
    """Space-time bump psi(t, x) = theta(t) phi(x) compactly supported in (t0, t1) x B(center, radius)"""

    center: tuple[float, ...]
    radius: float
    t0: float
    t1: float
    order: float = 2.0

    __test__ = False

    def __post_init__(self):
        if not self.radius > 0.0 or not self.t1 > self.t0:
            raise ParameterError(f"Test function needs radius > 0 and t1 > t0, got {self.radius}, ({self.t0}, {self.t1})")

    def check_support(self, grid: GridSpec) -> None:
        for c, L in zip(self.center, grid.extent):
            if abs(c) + self.radius >= L:
                raise ParameterError(f"Test support around {self.center} of radius {self.radius} leaves the box")

    def _x(self, grid: GridSpec):
        mesh = grid.mesh()
        offsets = [X - c for X, c in zip(mesh, self.center)]
        return offsets, sum(o**2 for o in offsets) / self.radius**2

    def space(self, grid: GridSpec) -> np.ndarray:
        _, x = self._x(grid)
        return _bump_profile(x, self.order)[0]

    def space_gradient(self, grid: GridSpec) -> np.ndarray:
        offsets, x = self._x(grid)
        _, slope = _bump_profile(x, self.order)
        return np.stack([2.0 * slope * o / self.radius**2 for o in offsets])

    def time(self, t: float) -> float:
        half = 0.5 * (self.t1 - self.t0)
        y = np.array([((t - 0.5 * (self.t0 + self.t1)) / half) ** 2])
        return float(_bump_profile(y, self.order)[0][0])

    def time_derivative(self, t: float) -> float:
        half = 0.5 * (self.t1 - self.t0)
        offset = t - 0.5 * (self.t0 + self.t1)
        y = np.array([(offset / half) ** 2])
        return float(_bump_profile(y, self.order)[1][0] * 2.0 * offset / half**2)


def default_test_family(grid: GridSpec, T: float, count: int = 3) -> list[TestFunction]:
    """Bumps centered along the first axis, radius 0.4 L, spanning (0, T) in time"""
    L = min(grid.extent)
    radius = 0.4 * L
    positions = np.linspace(-0.5, 0.5, count) * L if count > 1 else np.zeros(1)
    family = []
    for x in positions:
        center = (float(x),) + (0.0,) * (grid.dim - 1)
        test = TestFunction(center=center, radius=radius, t0=0.0, t1=T)
        test.check_support(grid)
        family.append(test)
    return family


# ============================================================================
# WEAK RESIDUALS
# ============================================================================

def renormalized_residual(trajectory: list[FluidState], b, tests: list[TestFunction]) -> float:
    """
    max over tests of |int int b(rho) d_t psi + b(rho) u . grad psi + (b'(rho) rho - b(rho)) div u psi|

    Time integrals use the Simpson rule over the snapshots; b is a
    RenormFunction or IdentityRenormalization.
    """
    if len(trajectory) < 2:
        return 0.0
    grid = trajectory[0].grid
    times = [s.t for s in trajectory]
    worst = 0.0
    for test in tests:
        phi = test.space(grid)
        dphi = test.space_gradient(grid)
        integrand = []
        for state in trajectory:
            rho = state.rho.values
            b_rho = b.value(rho)
            u_c = state.u.at_centers()
            flux = np.sum(u_c * dphi, axis=0)
            theta, dtheta = test.time(state.t), test.time_derivative(state.t)
            local = b_rho * (dtheta * phi + theta * flux) + b.defect(rho) * div(state.u).values * theta * phi
            integrand.append(float(np.sum(local)) * grid.cell_volume)
        worst = max(worst, abs(time_integral(integrand, times)))
    return worst


def momentum_weak_residual(
    trajectory: list[FluidState],
    law: BasePressureLaw,
    params: ScalingParams,
    tests: list[TestFunction],
    forcing: VectorField | None = None,
) -> float:
    """
    max over tests and directions k of the weak momentum residual

        int int rho u_k d_t psi + rho u_k u . grad psi + eps^-2 p(rho) d_k psi
                - nu S(grad u)_k . grad psi + rho f_k psi
    """
    if len(trajectory) < 2:
        return 0.0
    grid = trajectory[0].grid
    times = [s.t for s in trajectory]
    f_c = forcing.at_centers() if forcing is not None else None
    worst = 0.0
    for test in tests:
        phi = test.space(grid)
        dphi = test.space_gradient(grid)
        per_direction = [[] for _ in range(grid.dim)]
        for state in trajectory:
            rho = state.rho.values
            u_c = state.u.at_centers()
            S = stress_tensor(velocity_gradient(state.u), params.mu)
            p = law.pressure(rho)
            flux = np.sum(u_c * dphi, axis=0)
            theta, dtheta = test.time(state.t), test.time_derivative(state.t)
            for k in range(grid.dim):
                local = (
                    rho * u_c[k] * (dtheta * phi + theta * flux)
                    + theta * p * dphi[k] / params.eps**2
                    - theta * params.nu * np.sum(S[k] * dphi, axis=0)
                )
                if f_c is not None:
                    local = local + theta * rho * f_c[k] * phi
                per_direction[k].append(float(np.sum(local)) * grid.cell_volume)
        for values in per_direction:
            worst = max(worst, abs(time_integral(values, times)))
    return worst


# ============================================================================
# UNIFORM ESTIMATES
# ============================================================================

def barrier_functionals(state: FluidState, law: BasePressureLaw, alpha1: float) -> tuple[float, float]:
    """(|{rho < alpha1}|, int P(rho) 1_{rho > rho_bar - alpha1})"""
    rho = state.rho.values
    vol = state.grid.cell_volume
    low = float(np.count_nonzero(rho < alpha1)) * vol
    high_mask = rho > law.rho_bar - alpha1
    high = float(np.sum(law.potential(rho[high_mask]))) * vol if np.any(high_mask) else 0.0
    return low, high


@dataclass
class UniformEstimates:
    """Suprema of the eps-uniform quantities of a run and the ceilings they were checked against"""

    kinetic: float
    density: float
    dissipation: float
    low_density_measure: float
    high_density_potential: float
    ceilings: dict = field(default_factory=dict)

    @property
    def flags(self) -> list[str]:
        return [name for name, ceiling in self.ceilings.items() if getattr(self, name) > ceiling]

    @property
    def passed(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "density": self.density,
            "dissipation": self.dissipation,
            "low_density_measure": self.low_density_measure,
            "high_density_potential": self.high_density_potential,
            "ceilings": dict(self.ceilings),
            "flags": self.flags,
            "passed": self.passed,
        }


def uniform_estimates(
    trajectory: list[FluidState],
    params: ScalingParams,
    law: BasePressureLaw,
    alpha1: float,
    ceilings: dict | None = None,
) -> UniformEstimates:
    """
    sup ||sqrt(rho) u||, sup ||(rho - varrho)/eps||, sqrt(nu) ||grad u||_{L2 L2}
    and the two small-set functionals

    Args:
        trajectory: Ledgered run
        params: Scaling parameters of the run
        law: Pressure law
        alpha1: Width of the small sets near vacuum and near rho_bar
        ceilings: Optional {quantity: ceiling}; exceeded quantities are flagged
    """
    grid = trajectory[0].grid
    kinetic = max(math.sqrt(2.0 * max(s.ledger.kinetic, 0.0)) for s in trajectory)
    density = max(((s.rho - params.varrho) / params.eps).norm(2) for s in trajectory)
    grad_sq = [float(np.sum(velocity_gradient(s.u) ** 2)) * grid.cell_volume for s in trajectory]
    dissipation = math.sqrt(params.nu * max(time_integral(grad_sq, [s.t for s in trajectory]), 0.0))
    barriers = [barrier_functionals(s, law, alpha1) for s in trajectory]
    report = UniformEstimates(
        kinetic=kinetic,
        density=density,
        dissipation=dissipation,
        low_density_measure=max(b[0] for b in barriers),
        high_density_potential=max(b[1] for b in barriers),
        ceilings=dict(ceilings or {}),
    )
    if report.flags:
        logger.warning(f"Uniform estimates above their ceilings: {report.flags}")
    return report


# ============================================================================
# LINEARIZATION
# ============================================================================

def density_perturbation(state: FluidState, varrho: float, eps: float) -> ScalarField:
    """(rho - varrho) / eps"""
    return (state.rho - varrho) / eps


def linear_response_gap(trajectory: list[FluidState], acoustic: list, params: ScalingParams) -> float:
    """max_tau ||(rho - varrho)/eps - s|| / max_tau ||s|| against synchronized acoustic states"""
    check_synchronized([s.t for s in trajectory], [a.t for a in acoustic], "compressible and acoustic runs")
    scale = max(a.s.norm(2) for a in acoustic)
    gap = max(
        (density_perturbation(state, params.varrho, params.eps) - a.s.values).norm(2)
        for state, a in zip(trajectory, acoustic)
    )
    return gap / scale if scale > 0 else gap


@dataclass(frozen=True)
class LinearizationFit:
    amplitudes: tuple[float, ...]
    deviations: tuple[float, ...]
    exponent: float
    stderr: float


def fit_power(x, y) -> tuple[float, float]:
    """Least-squares slope of log y against log x and its standard error"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise FitError(f"Power fit needs at least two positive samples, got {list(zip(x, y))}")
    fit = linregress(np.log(x), np.log(y))
    stderr = float(fit.stderr) if x.size > 2 else 0.0
    return float(fit.slope), stderr


def linearization_exponent(
    law: BasePressureLaw,
    params: ScalingParams,
    rho1: ScalarField,
    u1: VectorField,
    emit_dt: float,
    amplitudes=LINEARIZATION_AMPLITUDES,
    reference_amplitude: float = REFERENCE_AMPLITUDE,
    **solver_kwargs,
) -> LinearizationFit:
    """
    Exponent of the nonlinear deviation of the density response in the amplitude a

    Each run starts from (varrho + eps a rho1, a u1). The deviation at a is
    max_tau ||(rho_a - varrho)/eps - (a / a_ref)(rho_ref - varrho)/eps||, with
    the reference run at a tiny amplitude standing in for the linear
    response; it scales like a^2. The reference is a CNS run, not
    solve_acoustic: the acoustic solver lives on a periodic spectral grid
    and would add its own discretization and viscous O(nu) drift to every
    deviation. Every run uses one fixed step so the discretization cancels
    between runs.
    """
    amplitudes = tuple(float(a) for a in amplitudes)

    def initial(a):
        return rho1 * (params.eps * a) + params.varrho, u1 * a

    rho_big, u_big = initial(max(amplitudes))
    dt = 0.5 * stable_step(rho_big, u_big, law, params)
    solver_kwargs = {**solver_kwargs, "dt": dt}

    def response(a):
        rho0, u0 = initial(a)
        run = solve_cns(rho0, u0, law, params, emit_dt, **solver_kwargs)
        return [density_perturbation(s, params.varrho, params.eps) for s in run]

    reference = response(reference_amplitude)
    deviations = []
    for a in amplitudes:
        ratio = a / reference_amplitude
        run = response(a)
        deviations.append(max((s - r * ratio).norm(2) for s, r in zip(run, reference)))
    exponent, stderr = fit_power(amplitudes, deviations)
    logger.info(f"Linearization exponent {exponent:.3f} +- {stderr:.3f} over amplitudes {amplitudes}")
    return LinearizationFit(amplitudes, tuple(deviations), exponent, stderr)
