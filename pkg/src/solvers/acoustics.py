"""
Acoustic System
Wave system eps d_t s + varrho lap Psi = 0, eps d_t grad Psi + (p'(varrho)/varrho) grad s = 0
"""

from dataclasses import dataclass, replace
import logging
import math

import numpy as np
import pandas as pd
from scipy import fft
from scipy.stats import linregress

from ..core.base_law import BasePressureLaw
from ..core.errors import CFLError, CurlError, GridMismatch, ParameterError, WindowError
from ..fields.grid import GridSpec, ScalarField, VectorField
from ..fields.operators import crop_scalar, crop_vector, grad, laplacian, spectral_k2
from ..fields.poisson import helmholtz_decompose
from .timeline import emission_times, substeps

logger = logging.getLogger(__name__)

CURL_TOL = 1e-8
LEAPFROG_CFL = 0.5
LEAPFROG_LIMIT = 0.9
DECAY_WINDOW = (10.0, 100.0)


@dataclass(frozen=True)
class AcousticParams:
    """Mach number, background density and sound-speed squared p'(varrho)"""

    eps: float
    varrho: float
    c_p: float

    def __post_init__(self):
        for name in ("eps", "varrho", "c_p"):
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"Acoustic parameter {name} must be positive, got {getattr(self, name)}")

    @classmethod
    def from_law(cls, law: BasePressureLaw, eps: float, varrho: float) -> "AcousticParams":
        c_p, _ = law.pressure_derivatives(varrho)
        return cls(eps=eps, varrho=varrho, c_p=c_p)

    @property
    def speed(self) -> float:
        """Wave speed sqrt(p'(varrho)) / eps"""
        return math.sqrt(self.c_p) / self.eps


@dataclass(frozen=True, eq=False)
class AcousticState:
    """Snapshot of the acoustic system; dt is set for leapfrog trajectories"""

    s: ScalarField
    psi: ScalarField
    grad_psi: VectorField
    t: float
    params: AcousticParams
    dt: float | None = None

    @property
    def grid(self) -> GridSpec:
        return self.s.grid


def acoustic_energy(state: AcousticState) -> float:
    """
    p'(varrho) ||s||^2 + varrho^2 ||grad Psi||^2

    Leapfrog states report the scheme's conserved modified energy, which
    subtracts varrho^2 p'(varrho) dt^2 / (4 eps^2) ||lap Psi||^2.
    """
    prm = state.params
    energy = prm.c_p * state.s.norm(2) ** 2 + prm.varrho**2 * state.grad_psi.norm(2) ** 2
    if state.dt:
        lap = laplacian(state.psi).norm(2) ** 2
        energy -= prm.varrho**2 * prm.c_p * state.dt**2 / (4.0 * prm.eps**2) * lap
    return float(energy)


def acoustic_time_derivatives(state: AcousticState) -> tuple[ScalarField, VectorField]:
    """(d_t s, d_t grad Psi) read off the system"""
    prm = state.params
    ds = laplacian(state.psi) * (-prm.varrho / prm.eps)
    dgrad = grad(state.s) * (-prm.c_p / (prm.varrho * prm.eps))
    return ds, dgrad


def initial_potential(grad_psi0: VectorField) -> ScalarField:
    """
    Psi_0 with grad Psi_0 = grad_psi0

    Raises:
        CurlError: If grad_psi0 has a divergence-free part beyond CURL_TOL
    """
    solenoidal, psi0 = helmholtz_decompose(grad_psi0)
    scale = max(grad_psi0.norm(2), 1e-300)
    if solenoidal.norm(2) > CURL_TOL * scale:
        raise CurlError(
            f"Initial grad Psi is not a gradient: solenoidal part {solenoidal.norm(2):.3e} "
            f"vs norm {scale:.3e}"
        )
    return psi0


def _state(s_values, psi_values, grid, t, params, dt=None) -> AcousticState:
    psi = ScalarField(grid, psi_values)
    return AcousticState(ScalarField(grid, s_values), psi, grad(psi), float(t), params, dt)


# ============================================================================
# SPECTRAL PROPAGATOR (periodic grids)
# ============================================================================

def _propagate_modes(s_hat, psi_hat, k2, params: AcousticParams, t: float):
    k = np.sqrt(k2)
    omega = math.sqrt(params.c_p) * k / params.eps
    phase = omega * t
    cos, sin = np.cos(phase), np.sin(phase)
    active = k2 > 0
    safe = np.where(active, omega, 1.0)
    s_t = s_hat * cos + np.where(active, params.varrho * k2 / (params.eps * safe), 0.0) * psi_hat * sin
    psi_t = psi_hat * cos - np.where(active, params.c_p / (params.varrho * params.eps * safe), 0.0) * s_hat * sin
    # the mean of s is conserved and Psi carries no mean
    s_t = np.where(active, s_t, s_hat)
    psi_t = np.where(active, psi_t, 0.0)
    return s_t, psi_t


def propagate(state: AcousticState, dt: float) -> AcousticState:
    """Advance a periodic state by dt (either sign) with the exact modal propagator"""
    grid = state.grid
    if not grid.periodic:
        raise GridMismatch("The exact propagator needs a periodic grid")
    k2 = spectral_k2(grid)
    s_hat, psi_hat = _propagate_modes(
        fft.fftn(state.s.values), fft.fftn(state.psi.values), k2, state.params, dt
    )
    return _state(fft.ifftn(s_hat).real, fft.ifftn(psi_hat).real, grid, state.t + dt, state.params)


# ============================================================================
# LEAPFROG (no-slip grids)
# ============================================================================

def leapfrog_limit(grid: GridSpec, params: AcousticParams) -> float:
    """Largest admissible leapfrog step 0.9 h eps / sqrt(p' d)"""
    return LEAPFROG_LIMIT * grid.h * params.eps / math.sqrt(params.c_p * grid.dim)


def _leapfrog(s, psi, grid, params, n_steps, dt):
    kick = 0.5 * dt * params.varrho / params.eps
    drift = dt * params.c_p / (params.varrho * params.eps)
    lap = laplacian(ScalarField(grid, psi)).values
    for _ in range(n_steps):
        s = s - kick * lap
        psi = psi - drift * (s - s.mean())
        lap = laplacian(ScalarField(grid, psi)).values
        s = s - kick * lap
    return s, psi


# ============================================================================
# SOLVER
# ============================================================================

def solve_acoustic(
    s0: ScalarField,
    grad_psi0: VectorField,
    params: AcousticParams,
    T: float,
    emit_dt: float,
    dt: float | None = None,
    cfl: float = LEAPFROG_CFL,
) -> list[AcousticState]:
    """
    Solve the acoustic system from (s0, grad Psi_0)

    Periodic grids use the exact per-mode propagator evaluated at every
    emission time. No-slip grids use the Stormer-Verlet leapfrog with the
    Neumann Laplacian; its step is cfl x (h eps / sqrt(p' d)) unless given.

    Args:
        s0: Initial density perturbation
        grad_psi0: Initial acoustic velocity, a discrete gradient
        params: Acoustic parameters
        T: Horizon
        emit_dt: Emission interval
        dt: Leapfrog step (no-slip grids only)
        cfl: Leapfrog step as a fraction of h eps / sqrt(p' d)

    Returns:
        List of AcousticState at the emission times

    Raises:
        GridMismatch: If the initial fields live on different grids
        CurlError: If grad_psi0 is not a gradient
        CFLError: If the leapfrog step exceeds 0.9 h eps / sqrt(p' d)
    """
    grid = s0.grid
    if grad_psi0.grid != grid:
        raise GridMismatch(f"Initial fields live on different grids: {grid} vs {grad_psi0.grid}")
    psi0 = initial_potential(grad_psi0)
    times = emission_times(T, emit_dt)
    logger.info(f"Acoustic solve on {grid}: eps={params.eps}, speed={params.speed:.4g}, T={T}")

    if grid.periodic:
        k2 = spectral_k2(grid)
        s_hat0 = fft.fftn(s0.values)
        psi_hat0 = fft.fftn(psi0.values)
        trajectory = []
        for t in times:
            s_hat, psi_hat = _propagate_modes(s_hat0, psi_hat0, k2, params, t)
            trajectory.append(_state(fft.ifftn(s_hat).real, fft.ifftn(psi_hat).real, grid, t, params))
        return trajectory

    limit = leapfrog_limit(grid, params)
    dt_max = cfl * limit / LEAPFROG_LIMIT if dt is None else dt
    if dt_max > limit * (1.0 + 1e-12):
        raise CFLError(f"Leapfrog step {dt_max:.4e} exceeds the stability limit {limit:.4e}")

    s, psi = s0.values.copy(), psi0.values.copy()
    trajectory = []
    step = substeps(times[1] - times[0], dt_max)[1] if times.size > 1 else dt_max
    for i, t in enumerate(times):
        if i:
            n, step = substeps(t - times[i - 1], dt_max)
            s, psi = _leapfrog(s, psi, grid, params, n, step)
        trajectory.append(_state(s.copy(), psi.copy(), grid, t, params, dt=step))
    return trajectory


def propagation_violation(trajectory: list[AcousticState], radius: float) -> float:
    """
    Largest |s| or |grad Psi - grad Psi_0| outside radius + c t + 2h over all snapshots

    Returns 0 when every snapshot's front already covers the box.
    """
    if not trajectory:
        return 0.0
    first = trajectory[0]
    grid = first.grid
    r = grid.radius()
    base = first.grad_psi.at_centers()
    worst = 0.0
    for state in trajectory:
        outside = r > radius + state.params.speed * state.t + 2.0 * grid.h
        if not np.any(outside):
            continue
        dgrad = np.sqrt(np.sum((state.grad_psi.at_centers() - base) ** 2, axis=0))
        worst = max(worst, float(np.max(np.abs(state.s.values[outside]))), float(np.max(dgrad[outside])))
    return worst


# ============================================================================
# RADIAL 3D REDUCTION
# ============================================================================

@dataclass(frozen=True)
class RadialTrajectory:
    """Radial profiles s(t, r) of a spherically symmetric 3D acoustic solution"""

    r: np.ndarray
    times: np.ndarray
    s: np.ndarray
    params: AcousticParams

    def lq_norm(self, q: float) -> np.ndarray:
        """3D L^q norms (weight 4 pi r^2); q = inf gives the max norm"""
        if math.isinf(q):
            return np.max(np.abs(self.s), axis=1)
        dr = self.r[1] - self.r[0]
        return (np.sum(4.0 * np.pi * self.r**2 * np.abs(self.s) ** q, axis=1) * dr) ** (1.0 / q)


def solve_acoustic_radial(
    s0_profile,
    params: AcousticParams,
    T: float,
    emit_dt: float,
    extent: float,
    cells: int,
    psi0_profile=None,
) -> RadialTrajectory:
    """
    Exact radial reduction of the 3D acoustic system

    r s and r Psi obey the 1D system on the odd extension to [-extent, extent];
    the 1D system is propagated spectrally and s = (r s) / r recovered on r > 0.

    Args:
        s0_profile: Callable r -> s0(r)
        params: Acoustic parameters
        T: Horizon
        emit_dt: Emission interval
        extent: Radius of the computational line
        cells: Cells on [-extent, extent], even
        psi0_profile: Optional callable r -> Psi0(r)
    """
    if cells % 2:
        raise ParameterError(f"Radial reduction needs an even cell count, got {cells}")
    line = GridSpec.cube(1, extent, cells)
    x = line.centers(0)
    r = np.abs(x)
    w_s = x * s0_profile(r)
    w_psi = x * psi0_profile(r) if psi0_profile is not None else np.zeros_like(x)

    k2 = spectral_k2(line)
    s_hat0, psi_hat0 = fft.fftn(w_s), fft.fftn(w_psi)
    times = emission_times(T, emit_dt)
    positive = x > 0
    profiles = np.empty((times.size, int(np.count_nonzero(positive))))
    for i, t in enumerate(times):
        s_hat, _ = _propagate_modes(s_hat0, psi_hat0, k2, params, t)
        w = fft.ifftn(s_hat).real
        profiles[i] = w[positive] / x[positive]
    logger.info(f"Radial acoustic solve: {times.size} snapshots, {cells} cells on [-{extent}, {extent}]")
    return RadialTrajectory(r=x[positive], times=times, s=profiles, params=params)


@dataclass(frozen=True)
class DecayFit:
    """Fitted decay exponent of ||s||_q against 1 + tau/eps"""

    q: float
    slope: float
    stderr: float
    predicted: float
    samples: int

    def within(self, tolerance: float) -> bool:
        return abs(self.slope - self.predicted) <= tolerance


def predicted_exponent(q: float) -> float:
    """1/q - 1/p with 1/p + 1/q = 1"""
    return -1.0 if math.isinf(q) else 2.0 / q - 1.0


def decay_exponent(trajectory: RadialTrajectory, q: float, window=DECAY_WINDOW) -> DecayFit:
    """
    Least-squares slope of log ||s(tau)||_q against log(1 + tau/eps)

    Raises:
        ParameterError: If q < 2
        WindowError: If the emitted times do not span the window decade
    """
    if not q >= 2.0:
        raise ParameterError(f"Decay exponent needs q >= 2, got {q}")
    lo, hi = window
    scaled = trajectory.times / trajectory.params.eps
    mask = (scaled >= lo * (1.0 - 1e-9)) & (scaled <= hi * (1.0 + 1e-9))
    if np.count_nonzero(mask) < 5 or scaled[mask].min() > lo * (1 + 1e-6) or scaled[mask].max() < hi * (1 - 1e-6):
        raise WindowError(
            f"Decay fit needs >= 5 samples spanning tau/eps in [{lo}, {hi}], "
            f"got {np.count_nonzero(mask)} samples up to {scaled.max():.3g}"
        )
    norms = trajectory.lq_norm(q)[mask]
    fit = linregress(np.log1p(scaled[mask]), np.log(norms))
    return DecayFit(
        q=float(q),
        slope=float(fit.slope),
        stderr=float(fit.stderr),
        predicted=predicted_exponent(q),
        samples=int(np.count_nonzero(mask)),
    )


def decay_table(trajectory: RadialTrajectory, q: float, fit: DecayFit | None = None) -> pd.DataFrame:
    """Rows (tau, Lq_norm, fitted_slope) for every emitted time"""
    return pd.DataFrame(
        {
            "tau": trajectory.times,
            "Lq_norm": trajectory.lq_norm(q),
            "fitted_slope": np.nan if fit is None else fit.slope,
        }
    )


def sample_on(state: AcousticState, target: GridSpec) -> AcousticState:
    """
    Transfer a periodic state onto a centered sub-box of equal spacing

    s and Psi are cropped at the centers; on no-slip targets grad Psi is
    sampled on the MAC faces and its wall faces are set to zero.
    """
    return replace(
        state,
        s=crop_scalar(state.s, target),
        psi=crop_scalar(state.psi, target),
        grad_psi=crop_vector(state.grad_psi, target),
    )
