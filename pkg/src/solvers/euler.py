"""
Incompressible Euler
Pseudo-spectral vorticity transport on the 2D periodic box and pressure recovery
"""

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy import fft

from ..core.errors import CFLError, GridError, ParameterError, ResolutionError, SolverError
from ..fields.grid import GridSpec, ScalarField, VectorField
from ..fields.operators import compact_bump, crop_scalar, crop_vector, curl, spectral_derivative, wavenumbers
from .timeline import emission_times, substeps

logger = logging.getLogger(__name__)

EULER_CFL = 0.5
CFL_LIMIT = 1.5
TAIL_WARNING = 1e-6
TAIL_LIMIT = 1e-2


@dataclass(frozen=True, eq=False)
class EulerState:
    """Vorticity, velocity and mean-zero pressure at time t"""

    omega: ScalarField
    v: VectorField
    Pi: ScalarField
    t: float

    @property
    def grid(self) -> GridSpec:
        return self.omega.grid


def _require_2d_periodic(grid: GridSpec) -> None:
    if grid.dim != 2 or not grid.periodic:
        raise GridError(f"The Euler solver needs a 2D periodic grid, got {grid}")


def _mode_fraction(grid: GridSpec) -> tuple[np.ndarray, ...]:
    """|k_i| / k_max per axis with the Nyquist mode at 1"""
    out = []
    for axis, n in enumerate(grid.cells):
        frac = np.abs(fft.fftfreq(n)) * 2.0
        shape = [1] * grid.dim
        shape[axis] = n
        out.append(frac.reshape(shape))
    return tuple(out)


def _dealias_mask(grid: GridSpec) -> np.ndarray:
    """Two-thirds rule: keep |k_i| < (2/3) k_max on every axis"""
    mask = np.ones(grid.shape, dtype=bool)
    for frac in _mode_fraction(grid):
        mask = mask & (frac < 2.0 / 3.0)
    return mask


# ============================================================================
# INITIAL CONDITIONS
# ============================================================================

def taylor_green(grid: GridSpec, amplitude: float = 1.0, mode: int = 1) -> VectorField:
    """
    Steady Taylor-Green cell with stream function A sin(k x) sin(k y), k = mode pi / L

    On the box [-pi, pi]^2 with A = mode = 1 the vorticity is 2 sin x sin y.
    """
    _require_2d_periodic(grid)
    kx, ky = (mode * np.pi / L for L in grid.extent)
    x, y = grid.mesh()
    return VectorField(
        grid,
        (
            amplitude * ky * np.sin(kx * x) * np.cos(ky * y),
            -amplitude * kx * np.cos(kx * x) * np.sin(ky * y),
        ),
    )


def _from_stream(psi: np.ndarray, grid: GridSpec) -> VectorField:
    return VectorField(grid, (spectral_derivative(psi, grid, 1), -spectral_derivative(psi, grid, 0)))


def random_band_limited(grid: GridSpec, seed: int, band: int = 4, amplitude: float = 1.0) -> VectorField:
    """
    Divergence-free field with random stream-function modes up to `band` per axis

    The field is rescaled so that max |v| = amplitude.
    """
    _require_2d_periodic(grid)
    rng = np.random.default_rng(seed)
    psi_hat = np.zeros(grid.shape, dtype=complex)
    for i in range(-band, band + 1):
        for j in range(-band, band + 1):
            if (i, j) == (0, 0) or i * i + j * j > band * band:
                continue
            psi_hat[i, j] = (rng.standard_normal() + 1j * rng.standard_normal()) / (i * i + j * j)
    psi = fft.ifftn(psi_hat).real
    v = _from_stream(psi, grid)
    peak = float(np.max(v.magnitude()))
    if peak == 0.0:
        return v
    return v * (amplitude / peak)


def compact_vortex(grid: GridSpec, radius: float, amplitude: float = 1.0, order: float = 2.0) -> VectorField:
    """Velocity of the stream function A bump(|x| / radius), compactly supported vorticity"""
    _require_2d_periodic(grid)
    if radius >= min(grid.extent):
        raise ParameterError(f"Vortex radius {radius} does not fit in the box {grid.extent}")
    psi = amplitude * compact_bump(grid.radius(), radius, order)
    return _from_stream(psi, grid)


# ============================================================================
# PRESSURE AND DIAGNOSTICS
# ============================================================================

def _advection(v: VectorField) -> tuple[np.ndarray, ...]:
    """(v . grad) v in divergence form d_j (v_i v_j)"""
    grid = v.grid
    return tuple(
        sum(spectral_derivative(vi * vj, grid, j) for j, vj in enumerate(v.components))
        for vi in v.components
    )


def euler_pressure(v: VectorField) -> ScalarField:
    """
    Mean-zero Pi with -lap Pi = div div (v x v)

    Raises:
        GridError: On non-periodic grids
        SolverError: If the inversion produces non-finite values
    """
    grid = v.grid
    if not grid.periodic:
        raise GridError(f"Pressure recovery needs a periodic grid, got {grid}")
    k = wavenumbers(grid)
    k2 = sum(ki**2 for ki in k) * np.ones(grid.shape)
    rhs = np.zeros(grid.shape, dtype=complex)
    for i, vi in enumerate(v.components):
        for j, vj in enumerate(v.components):
            rhs -= k[i] * k[j] * fft.fftn(vi * vj)
    pi_hat = np.where(k2 > 0, rhs / np.where(k2 > 0, k2, 1.0), 0.0)
    Pi = fft.ifftn(pi_hat).real
    if not np.all(np.isfinite(Pi)):
        raise SolverError("Pressure recovery produced non-finite values")
    return ScalarField(grid, Pi)


def euler_time_derivative(v: VectorField, Pi: ScalarField | None = None) -> VectorField:
    """d_t v = -(v . grad v) - grad Pi"""
    grid = v.grid
    Pi = euler_pressure(v) if Pi is None else Pi
    adv = _advection(v)
    return VectorField(
        grid, tuple(-a - spectral_derivative(Pi.values, grid, i) for i, a in enumerate(adv))
    )


def momentum_residual(v: VectorField, dvdt: VectorField, Pi: ScalarField) -> VectorField:
    """d_t v + v . grad v + grad Pi"""
    grid = v.grid
    adv = _advection(v)
    return VectorField(
        grid,
        tuple(
            d + a + spectral_derivative(Pi.values, grid, i)
            for i, (d, a) in enumerate(zip(dvdt.components, adv))
        ),
    )


def euler_invariants(state: EulerState) -> tuple[float, float]:
    """(||v||^2, ||omega||^2)"""
    return state.v.norm(2) ** 2, state.omega.norm(2) ** 2


def spectral_tail(omega: ScalarField) -> float:
    """
    Fraction of vorticity energy in the outer half of the dealiased band

    The band is the two-thirds box; the tail collects modes with some
    |k_i| above a third of the axis cutoff.
    """
    grid = omega.grid
    w2 = np.abs(fft.fftn(omega.values)) ** 2
    total = float(np.sum(w2))
    if total == 0.0:
        return 0.0
    tail = np.zeros(grid.shape, dtype=bool)
    for frac in _mode_fraction(grid):
        tail = tail | (frac >= 1.0 / 3.0)
    return float(np.sum(w2[tail]) / total)


def pressure_time_derivative(trajectory: list[EulerState]) -> list[ScalarField]:
    """d_t Pi by centered differences between snapshots, one-sided at the ends"""
    if len(trajectory) < 2:
        return [ScalarField.zeros(state.grid) for state in trajectory]
    t = np.array([state.t for state in trajectory])
    values = np.stack([state.Pi.values for state in trajectory])
    derivative = np.gradient(values, t, axis=0)
    return [ScalarField(state.grid, d) for state, d in zip(trajectory, derivative)]


def sample_on_faces(state: EulerState, target: GridSpec) -> tuple[VectorField, ScalarField]:
    """Velocity and pressure restricted to a centered sub-box, velocity on its MAC faces"""
    return crop_vector(state.v, target), crop_scalar(state.Pi, target)


# ============================================================================
# SOLVER
# ============================================================================

class _VorticityTransport:
    """Right-hand side -v . grad omega in spectral space with a constant mean flow"""

    def __init__(self, grid: GridSpec, mean_flow: tuple[float, float]):
        self.grid = grid
        self.mean_flow = mean_flow
        self.mask = _dealias_mask(grid)
        kx, ky = wavenumbers(grid)
        self.kx = kx * np.ones(grid.shape)
        self.ky = ky * np.ones(grid.shape)
        k2 = self.kx**2 + self.ky**2
        self.inv_k2 = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)

    def velocity(self, w_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        psi_hat = w_hat * self.inv_k2
        vx = fft.ifftn(1j * self.ky * psi_hat).real + self.mean_flow[0]
        vy = fft.ifftn(-1j * self.kx * psi_hat).real + self.mean_flow[1]
        return vx, vy

    def __call__(self, w_hat: np.ndarray) -> np.ndarray:
        w_hat = w_hat * self.mask
        vx, vy = self.velocity(w_hat)
        wx = fft.ifftn(1j * self.kx * w_hat).real
        wy = fft.ifftn(1j * self.ky * w_hat).real
        return -fft.fftn(vx * wx + vy * wy) * self.mask


def _rk4(rhs, w_hat, dt):
    k1 = rhs(w_hat)
    k2 = rhs(w_hat + 0.5 * dt * k1)
    k3 = rhs(w_hat + 0.5 * dt * k2)
    k4 = rhs(w_hat + dt * k3)
    return w_hat + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _make_state(w_hat, transport: _VorticityTransport, t: float) -> EulerState:
    grid = transport.grid
    vx, vy = transport.velocity(w_hat)
    v = VectorField(grid, (vx, vy))
    return EulerState(
        omega=ScalarField(grid, fft.ifftn(w_hat).real),
        v=v,
        Pi=euler_pressure(v),
        t=float(t),
    )


def solve_euler(
    v0: VectorField,
    T: float,
    emit_dt: float,
    cfl: float = EULER_CFL,
    dt: float | None = None,
    tail_limit: float = TAIL_LIMIT,
) -> list[EulerState]:
    """
    Solve the 2D incompressible Euler system from a divergence-free v0

    The vorticity omega = curl v0 is transported pseudo-spectrally with
    two-thirds dealiasing and classical RK4; velocity is recovered by
    Biot-Savart plus the conserved mean flow, pressure by euler_pressure.

    Args:
        v0: Initial velocity on a 2D periodic grid
        T: Horizon
        emit_dt: Emission interval
        cfl: Step as a fraction of h / max|v| when dt is not given
        dt: Optional fixed step
        tail_limit: Largest tolerated spectral_tail before aborting

    Returns:
        List of EulerState at the emission times

    Raises:
        GridError: Unless the grid is 2D periodic
        CFLError: If the step violates h / max|v| x 1.5 or the velocity is not finite
        ResolutionError: If the spectral tail exceeds tail_limit
    """
    grid = v0.grid
    _require_2d_periodic(grid)
    mean_flow = tuple(float(np.mean(c)) for c in v0.components)
    omega0 = curl(v0)
    transport = _VorticityTransport(grid, mean_flow)
    w_hat = fft.fftn(omega0.values)
    w_hat.flat[0] = 0.0

    times = emission_times(T, emit_dt)
    trajectory = [_make_state(w_hat, transport, 0.0)]
    logger.info(f"Euler solve on {grid}: T={T}, emit_dt={emit_dt}")
    for i in range(1, times.size):
        speed = float(np.max(trajectory[-1].v.magnitude()))
        if not math.isfinite(speed):
            raise CFLError(f"Velocity is not finite at t={trajectory[-1].t}")
        stable = CFL_LIMIT * grid.h / speed if speed > 0 else math.inf
        step = dt if dt is not None else (cfl * grid.h / speed if speed > 0 else emit_dt)
        if step > stable:
            raise CFLError(f"Euler step {step:.4e} exceeds the limit {stable:.4e} at speed {speed:.4g}")
        n, h_t = substeps(times[i] - times[i - 1], step)
        for _ in range(n):
            w_hat = _rk4(transport, w_hat, h_t)
        state = _make_state(w_hat, transport, times[i])
        tail = spectral_tail(state.omega)
        if tail > tail_limit:
            raise ResolutionError(f"Spectral tail {tail:.3e} exceeds {tail_limit:g} at t={state.t:.4g}")
        if tail > TAIL_WARNING:
            logger.warning(f"Euler spectral tail {tail:.3e} at t={state.t:.4g}")
        trajectory.append(state)
    return trajectory
