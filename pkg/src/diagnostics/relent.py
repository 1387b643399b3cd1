"""
Relative Entropy
Comparison fields, the relative entropy inequality with its remainders, and the rate bound
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from ..core.base_law import BasePressureLaw
from ..core.errors import GridError, GridMismatch, ParameterError
from ..eos.lemmas import density_control_sides, initial_entropy_constant, relative_potential
from ..eos.renormalization import IdentityRenormalization
from ..fields.bogovskii import bogovskii
from ..fields.grid import GridSpec, ScalarField, VectorField
from ..fields.operators import (
    crop_scalar,
    crop_vector,
    div,
    grad,
    laplacian,
    sobolev_norm,
    stress_tensor,
    velocity_gradient,
)
from ..solvers.acoustics import AcousticState, acoustic_time_derivatives
from ..solvers.cns import FluidState, ScalingParams, face_average
from ..solvers.euler import EulerState, euler_time_derivative
from ..solvers.timeline import check_synchronized
from .weak_solution import cumulative_time_integral

logger = logging.getLogger(__name__)

REI_TOL = 1e-2
REI_ABS_TOL = 1e-10
PAIR_TOL = 5e-2
MIN_SHELL_CELLS = 4


# ============================================================================
# CORRECTOR
# ============================================================================

def _smoothstep(z: np.ndarray) -> np.ndarray:
    z = np.clip(z, 0.0, 1.0)
    return z**3 * (10.0 - 15.0 * z + 6.0 * z**2)


def _ramp(distance: np.ndarray, width: float) -> np.ndarray:
    """1 within width/4 of the wall, 0 beyond width, quintic in between"""
    collar = 0.25 * width
    return _smoothstep((width - distance) / (width - collar))


def _distance(coords: tuple[np.ndarray, ...], grid: GridSpec) -> np.ndarray:
    return np.min([L - np.abs(x) for L, x in zip(grid.extent, coords)], axis=0)


def cutoff(grid: GridSpec, width: float) -> tuple[ScalarField, tuple[np.ndarray, ...]]:
    """
    Boundary cutoff chi_R at the centers and on every component's faces

    Raises:
        GridError: On periodic grids or if width < 4h
    """
    if grid.periodic:
        raise GridError("The boundary cutoff needs a no-slip grid")
    if width < MIN_SHELL_CELLS * grid.h:
        raise GridError(f"Shell width {width:.4g} is below {MIN_SHELL_CELLS} cells ({MIN_SHELL_CELLS * grid.h:.4g})")
    if width > min(grid.extent):
        raise GridError(f"Shell width {width:.4g} exceeds the half-width {min(grid.extent):.4g}")
    centers = ScalarField(grid, _ramp(_distance(grid.mesh(), grid), width))
    faces = tuple(_ramp(_distance(grid.face_mesh(a), grid), width) for a in range(grid.dim))
    return centers, faces


def build_corrector(v: VectorField, grad_psi0: VectorField, width: float) -> tuple[ScalarField, VectorField]:
    """
    Cutoff chi_R and corrector w_R = -chi_R (v + grad Psi_0)

    Args:
        v: Target velocity on the no-slip grid
        grad_psi0: Initial acoustic velocity on the same grid
        width: Shell width, at least 4 cells

    Returns:
        Tuple (chi_R, w_R)
    """
    grid = v.grid
    if grad_psi0.grid != grid:
        raise GridMismatch(f"Corrector fields live on different grids: {grid} vs {grad_psi0.grid}")
    chi, chi_faces = cutoff(grid, width)
    base = v + grad_psi0
    w = VectorField.with_walls(grid, tuple(-c * b for c, b in zip(chi_faces, base.components)))
    return chi, w


@dataclass(frozen=True, eq=False)
class ComparisonFields:
    """Comparison pair (r, U) = (varrho + eps s, v + grad Psi + w_R) and its constituents"""

    t: float
    eps: float
    varrho: float
    s: ScalarField
    psi: ScalarField
    grad_psi: VectorField
    v: VectorField
    w_R: VectorField
    chi_R: ScalarField
    r: ScalarField
    U: VectorField
    ds_dt: ScalarField
    dU_dt: VectorField
    dw_dt: VectorField
    dgrad_dt: VectorField

    @property
    def grid(self) -> GridSpec:
        return self.r.grid


def comparison_trajectory(
    grid: GridSpec,
    acoustic: list[AcousticState],
    euler: list[EulerState] | None,
    law: BasePressureLaw,
    width: float,
) -> list[ComparisonFields]:
    """
    Comparison fields on a no-slip grid at every acoustic snapshot

    The acoustic and Euler trajectories live on periodic boxes of the same
    spacing containing the grid; they are cropped onto it, vectors onto
    the MAC faces. Without an Euler trajectory v = 0 (the 1D case).

    Raises:
        SyncError: If the acoustic and Euler snapshot times differ
        DomainError: If r leaves (0, rho_bar)
    """
    if euler is not None:
        check_synchronized([a.t for a in acoustic], [e.t for e in euler], "acoustic and Euler trajectories")
    first = acoustic[0]
    grad_psi0 = crop_vector(first.grad_psi, grid)
    chi, chi_faces = cutoff(grid, width)
    zero = VectorField.zeros(grid)
    out = []
    for n, state in enumerate(acoustic):
        prm = state.params
        ds, dgrad = acoustic_time_derivatives(state)
        if euler is not None:
            e = euler[n]
            v = crop_vector(e.v, grid)
            dv = crop_vector(euler_time_derivative(e.v, e.Pi), grid)
        else:
            v, dv = zero, zero
        base = v + grad_psi0
        w = VectorField.with_walls(grid, tuple(-c * b for c, b in zip(chi_faces, base.components)))
        dw = VectorField.with_walls(grid, tuple(-c * b for c, b in zip(chi_faces, dv.components)))
        s = crop_scalar(state.s, grid)
        gpsi = crop_vector(state.grad_psi, grid)
        dgrad_faces = crop_vector(dgrad, grid)
        r = s * prm.eps + prm.varrho
        law.check_density(r.values, open_left=True)
        out.append(
            ComparisonFields(
                t=state.t,
                eps=prm.eps,
                varrho=prm.varrho,
                s=s,
                psi=crop_scalar(state.psi, grid),
                grad_psi=gpsi,
                v=v,
                w_R=w,
                chi_R=chi,
                r=r,
                U=v + gpsi + w,
                ds_dt=crop_scalar(ds, grid),
                dU_dt=dv + dgrad_faces + dw,
                dw_dt=dw,
                dgrad_dt=dgrad_faces,
            )
        )
    return out


def corrector_norms(comparison: list[ComparisonFields], p: float = 2.0) -> pd.DataFrame:
    """Per snapshot ||w_R||_{W^{2,p}} and ||d_t w_R||_{L^p}"""
    rows = []
    for cmp in comparison:
        rows.append(
            {
                "t": cmp.t,
                "w_W2p": sobolev_norm(cmp.w_R.at_centers(), cmp.grid, 2, p),
                "dtw_Lp": cmp.dw_dt.norm(p),
            }
        )
    return pd.DataFrame(rows)


# ============================================================================
# RELATIVE ENTROPY
# ============================================================================

def _face_inner(rho: np.ndarray, a: VectorField, b: VectorField) -> float:
    """int rho a . b with rho averaged onto the faces"""
    total = sum(
        float(np.sum(face_average(rho, axis) * x * y))
        for axis, (x, y) in enumerate(zip(a.components, b.components))
    )
    return total * a.grid.cell_volume


def relative_entropy(state: FluidState, cmp: ComparisonFields, law: BasePressureLaw, eps: float) -> float:
    """
    int 1/2 rho |u - U|^2 + eps^-2 (P(rho) - P(r) - P'(r)(rho - r))

    Raises:
        GridMismatch: If the fields live on different grids
        DomainError: If rho or r leave their intervals
    """
    if state.grid != cmp.grid:
        raise GridMismatch(f"State grid {state.grid} does not match comparison grid {cmp.grid}")
    rho = state.rho.values
    diff = state.u - cmp.U
    kinetic = 0.5 * _face_inner(rho, diff, diff)
    gap = float(np.sum(relative_potential(law, rho, cmp.r.values))) * state.grid.cell_volume
    return kinetic + gap / eps**2


def limit_distance(state: FluidState, cmp: ComparisonFields, eps: float) -> tuple[float, float]:
    """
    (int rho |u - grad Psi - v|^2, ||(rho - varrho)/eps - s||^2)

    Raises:
        SyncError: If the snapshot times differ
    """
    check_synchronized([state.t], [cmp.t], "fluid state and comparison fields")
    diff = state.u - cmp.grad_psi - cmp.v
    velocity_gap = _face_inner(state.rho.values, diff, diff)
    density_gap = (((state.rho - cmp.varrho) / eps) - cmp.s).norm(2) ** 2
    return velocity_gap, density_gap


def density_control_check(state: FluidState, cmp: ComparisonFields, law: BasePressureLaw, constant: float) -> dict:
    """||rho - r||^2 <= C int gap(rho, r) at one snapshot"""
    lhs, gap = density_control_sides(law, state.rho.values, cmp.r.values, state.grid.cell_volume)
    return {"t": state.t, "lhs": lhs, "rhs": constant * gap, "passed": lhs <= constant * gap * (1.0 + 1e-9) + 1e-300}


# ============================================================================
# REMAINDERS
# ============================================================================

def _centers_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=0)


def _r1_terms(state: FluidState, cmp: ComparisonFields, law: BasePressureLaw, params: ScalingParams, forcing):
    """Integrands at one snapshot of the R1 pieces and of the cross dissipation"""
    grid = state.grid
    vol = grid.cell_volume
    eps = params.eps
    rho = state.rho.values
    r = cmp.r.values

    u_c = state.u.at_centers()
    U_c = cmp.U.at_centers()
    G_U = velocity_gradient(cmp.U)
    G_u = velocity_gradient(state.u)
    S_U = stress_tensor(G_U, params.mu)
    S_u = stress_tensor(G_u, params.mu)

    material = cmp.dU_dt.at_centers() + np.einsum("ij...,j...->i...", G_U, u_c)
    convective = float(np.sum(rho * _centers_dot(material, U_c - u_c))) * vol
    viscous = params.nu * float(np.sum(S_U * (G_U - G_u))) * vol

    dP_r, d2P_r = law.potential_derivatives(r)
    pressure_time = float(np.sum((r - rho) * d2P_r * eps * cmp.ds_dt.values)) * vol / eps**2
    grad_dP = grad(ScalarField(grid, dP_r))
    flux = VectorField.with_walls(
        grid,
        tuple(
            face_average(r, a) * Uc - face_average(rho, a) * uc
            for a, (Uc, uc) in enumerate(zip(cmp.U.components, state.u.components))
        ),
    )
    pressure_flux = flux.inner(grad_dP) / eps**2
    divergence = float(np.sum(div(cmp.U).values * (law.pressure(r) - law.pressure(rho)))) * vol / eps**2
    force = 0.0
    if forcing is not None:
        force = _face_inner(rho, forcing, state.u - cmp.U)

    # S is a symmetric bilinear form, so (S(gu) - S(gU)) : (gu - gU) = S(gu):gu - 2 S(gu):gU + S(gU):gU
    cross = params.nu * float(np.sum(-2.0 * S_u * G_U + S_U * G_U)) * vol
    return {
        "convective": convective,
        "viscous": viscous,
        "pressure_time": pressure_time,
        "pressure_flux": pressure_flux,
        "divergence": divergence,
        "forcing": force,
    }, cross


def _bogovskii_terms(state: FluidState, b, law: BasePressureLaw, params: ScalingParams, forcing) -> dict:
    """
    Integrands of the momentum equation tested with B(b(rho) - <b(rho)>)

    Returns the R2 pieces, the boundary value int rho u . B(...) and the
    pressure-renormalization density eps^-2 int p(rho) b(rho).
    """
    grid = state.grid
    vol = grid.cell_volume
    rho = state.rho.values
    u = state.u
    b_rho = np.asarray(b.value(rho), dtype=float)
    p = law.pressure(rho)
    mean_b = float(np.mean(b_rho))
    pb = float(np.sum(p * b_rho)) * vol / params.eps**2
    zeros = {
        "mean_pressure": float(np.sum(p)) * vol * mean_b / params.eps**2,
        "convective": 0.0,
        "viscous": 0.0,
        "forcing": 0.0,
        "transport": 0.0,
        "defect": 0.0,
        "boundary": 0.0,
        "pb": pb,
    }
    if not np.any(b_rho - mean_b):
        return zeros

    def B(values: np.ndarray) -> VectorField:
        return bogovskii(ScalarField(grid, values - values.mean()))

    B_b = B(b_rho)
    transported = VectorField.with_walls(grid, tuple(face_average(b_rho, a) * c for a, c in enumerate(u.components)))
    B_div = B(div(transported).values)
    B_def = B(np.asarray(b.defect(rho), dtype=float) * div(u).values)

    u_c = u.at_centers()
    G_B = velocity_gradient(B_b)
    S_u = stress_tensor(velocity_gradient(u), params.mu)
    terms = dict(zeros)
    terms["convective"] = -float(np.sum(rho * np.einsum("i...,j...,ij...->...", u_c, u_c, G_B))) * vol
    terms["viscous"] = params.nu * float(np.sum(S_u * G_B)) * vol
    if forcing is not None:
        terms["forcing"] = -_face_inner(rho, forcing, B_b)
    terms["transport"] = _face_inner(rho, u, B_div)
    terms["defect"] = _face_inner(rho, u, B_def)
    terms["boundary"] = _face_inner(rho, u, B_b)
    return terms


_R2_KEYS = ("mean_pressure", "convective", "viscous", "forcing", "transport", "defect")


@dataclass
class RelEntropyReport:
    """Relative entropy inequality evaluated at every snapshot"""

    tau: np.ndarray
    E: np.ndarray
    dissipation: np.ndarray
    pb_term: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    R3: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray
    breakdown: dict = field(default_factory=dict)
    pairs: dict = field(default_factory=dict)
    density_control: list = field(default_factory=list)
    tol: float = REI_TOL
    abs_tol: float = REI_ABS_TOL

    @property
    def lhs_minus_rhs(self) -> np.ndarray:
        return self.lhs - self.rhs

    @property
    def pass_flags(self) -> np.ndarray:
        return self.lhs <= self.rhs + self.slack

    @property
    def passed(self) -> bool:
        return bool(np.all(self.pass_flags)) and bool(np.all(np.isfinite(self.lhs))) and bool(np.all(self.E >= 0.0))

    def to_frame(self) -> pd.DataFrame:
        """relent.csv rows"""
        return pd.DataFrame(
            {
                "tau": self.tau,
                "E": self.E,
                "dissipation": self.dissipation,
                "pb_term": self.pb_term,
                "R1": self.R1,
                "R2": self.R2,
                "R3": self.R3,
                "lhs_minus_rhs": self.lhs_minus_rhs,
            }
        )

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "abs_tol": self.abs_tol,
            "max_lhs_minus_rhs": float(np.max(self.lhs_minus_rhs)) if self.tau.size else 0.0,
            "breakdown_final": {k: float(v[-1]) for k, v in self.breakdown.items()},
            "pairs": self.pairs,
            "density_control_passed": all(d["passed"] for d in self.density_control),
        }


def _pair(a: np.ndarray, b: np.ndarray, tol: float) -> dict:
    total = a + b
    scale = float(max(np.max(np.abs(a)), np.max(np.abs(b)))) if a.size else 0.0
    residual = float(np.max(np.abs(total))) if a.size else 0.0
    return {"residual": residual, "scale": scale, "passed": residual <= tol * scale + REI_ABS_TOL}


def cancellation_pairs(
    trajectory: list[FluidState], comparison: list[ComparisonFields], law: BasePressureLaw, tol: float = PAIR_TOL
) -> dict:
    """
    Discrete analogs of the exact cancellations among the expanded R1 terms

    pressure_energy: (p'(varrho)/(2 varrho)) [int s^2] + (varrho/2) [int |grad Psi|^2], from 0 to tau
    acoustic_flux:   -eps^-1 int int (p'(varrho)/varrho) grad s . rho u   against   -int int rho u . d_t grad Psi
    density_wave:    eps^-1 int int (varrho - rho) P''(varrho) d_t s   against   -eps^-2 p'(varrho) int int (rho - varrho) lap Psi
    """
    if not trajectory:
        return {}
    times = np.array([s.t for s in trajectory])
    eps = comparison[0].eps
    varrho = comparison[0].varrho
    c_p, _ = law.pressure_derivatives(varrho)
    _, d2P = law.potential_derivatives(varrho)
    vol = trajectory[0].grid.cell_volume

    s2 = np.array([c.s.norm(2) ** 2 for c in comparison])
    g2 = np.array([c.grad_psi.norm(2) ** 2 for c in comparison])
    energy_a = c_p / (2.0 * varrho) * (s2 - s2[0])
    energy_b = varrho / 2.0 * (g2 - g2[0])

    flux_a, flux_b, wave_a, wave_b = [], [], [], []
    for state, cmp in zip(trajectory, comparison):
        rho = state.rho.values
        flux_a.append(-(c_p / varrho) / eps * _face_inner(rho, grad(cmp.s), state.u))
        flux_b.append(-_face_inner(rho, state.u, cmp.dgrad_dt))
        wave_a.append(float(np.sum((varrho - rho) * d2P * cmp.ds_dt.values)) * vol / eps)
        lap = laplacian(cmp.psi).values
        wave_b.append(-c_p * float(np.sum((rho - varrho) * lap)) * vol / eps**2)

    return {
        "pressure_energy": _pair(energy_a, energy_b, tol),
        "acoustic_flux": _pair(
            cumulative_time_integral(flux_a, times), cumulative_time_integral(flux_b, times), tol
        ),
        "density_wave": _pair(
            cumulative_time_integral(wave_a, times), cumulative_time_integral(wave_b, times), tol
        ),
    }


def rei_check(
    trajectory: list[FluidState],
    comparison: list[ComparisonFields],
    law: BasePressureLaw,
    params: ScalingParams,
    b=None,
    forcing: VectorField | None = None,
    tol: float = REI_TOL,
    abs_tol: float = REI_ABS_TOL,
    density_constant: float | None = None,
    pair_tol: float = PAIR_TOL,
) -> RelEntropyReport:
    """
    Evaluate the relative entropy inequality along a run

        E(tau) + nu int int (S(grad u) - S(grad U)) : grad(u - U) + eps^-2 int int p(rho) b(rho)
            <= E(0) + int R1 + R2 + R3

    The viscous term reuses the run's own dissipation ledger for
    nu int int S(grad u) : grad u. Every B(.) is a Bogovskii solve with the
    mean of its argument removed. A snapshot passes when
    LHS <= RHS + tol (E(0) + sum of |terms|) + abs_tol.

    Args:
        trajectory: Compressible run
        comparison: Comparison fields at the same times
        law: Pressure law
        params: Scaling parameters of the run
        b: Renormalization function; None means b = 0
        forcing: Body force of the run
        tol: Relative slack
        abs_tol: Absolute slack
        density_constant: Optional C of ||rho - r||^2 <= C int gap, checked per snapshot
        pair_tol: Relative tolerance of the cancellation pairs

    Raises:
        SyncError: If the snapshot times differ
    """
    check_synchronized([s.t for s in trajectory], [c.t for c in comparison], "fluid and comparison trajectories")
    times = np.array([s.t for s in trajectory])
    eps = params.eps

    E = np.array([relative_entropy(s, c, law, eps) for s, c in zip(trajectory, comparison)])
    r1_rows, cross = [], []
    b_rows = []
    density_control = []
    for state, cmp in zip(trajectory, comparison):
        terms, cross_term = _r1_terms(state, cmp, law, params, forcing)
        r1_rows.append(terms)
        cross.append(cross_term)
        if b is not None:
            b_rows.append(_bogovskii_terms(state, b, law, params, forcing))
        if density_constant is not None:
            density_control.append(density_control_check(state, cmp, law, density_constant))

    breakdown = {}
    for key in r1_rows[0]:
        breakdown[f"R1_{key}"] = cumulative_time_integral([row[key] for row in r1_rows], times)
    R1 = sum(breakdown[f"R1_{key}"] for key in r1_rows[0])

    zeros = np.zeros_like(times)
    if b_rows:
        for key in _R2_KEYS:
            breakdown[f"R2_{key}"] = cumulative_time_integral([row[key] for row in b_rows], times)
        R2 = sum(breakdown[f"R2_{key}"] for key in _R2_KEYS)
        boundary = np.array([row["boundary"] for row in b_rows])
        R3 = boundary - boundary[0]
        pb = cumulative_time_integral([row["pb"] for row in b_rows], times)
    else:
        R2, R3, pb = zeros, zeros.copy(), zeros.copy()
    breakdown["R3"] = R3

    ledger = np.array([s.ledger.dissipation for s in trajectory])
    dissipation = ledger + cumulative_time_integral(cross, times)
    lhs = E + dissipation + pb
    rhs = E[0] + R1 + R2 + R3
    magnitude = np.abs(dissipation) + np.abs(pb) + sum(np.abs(v) for v in breakdown.values())
    slack = tol * (E[0] + magnitude) + abs_tol

    report = RelEntropyReport(
        tau=times,
        E=E,
        dissipation=dissipation,
        pb_term=pb,
        R1=R1,
        R2=R2,
        R3=R3,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        breakdown=breakdown,
        pairs=cancellation_pairs(trajectory, comparison, law, pair_tol),
        density_control=density_control,
        tol=tol,
        abs_tol=abs_tol,
    )
    logger.info(f"Relative entropy check eps={eps}: passed={report.passed}, max LHS-RHS {np.max(lhs - rhs):.3e}")
    return report


def initial_entropy_bound(
    law: BasePressureLaw,
    params: ScalingParams,
    eps0: float,
    velocity_offset: float,
    corrector_norm: float,
    density_offset: float,
) -> float:
    """
    (varrho + eps0 D)(||u0_eps - u0||^2 + ||w_R(0)||^2) + K ||rho1_eps - rho1||^2

    K = max p'(z)/z over [varrho, varrho + eps0 D]; all norms are squared L2 norms.
    """
    K = initial_entropy_constant(law, params.varrho, eps0, params.D)
    top = params.varrho + eps0 * params.D
    return top * (velocity_offset + corrector_norm) + K * density_offset


# ============================================================================
# MEAN PRESSURE
# ============================================================================

@dataclass
class MeanPressureReport:
    """|Omega|^-1 int int p(rho) measured directly and bounded through the Bogovskii identity"""

    tau: np.ndarray
    direct: np.ndarray
    bound: np.ndarray
    moment_direct: np.ndarray
    moment_bogovskii: np.ndarray
    j1: np.ndarray
    mean_density: float
    denominator: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.direct <= self.bound * (1.0 + 1e-6) + 1e-12))

    def to_dict(self) -> dict:
        return {
            "final_direct": float(self.direct[-1]),
            "final_bound": float(self.bound[-1]),
            "final_moment_direct": float(self.moment_direct[-1]),
            "final_moment_bogovskii": float(self.moment_bogovskii[-1]),
            "final_j1": float(self.j1[-1]),
            "mean_density": self.mean_density,
            "denominator": self.denominator,
            "passed": self.passed,
        }


def mean_pressure_estimate(
    trajectory: list[FluidState],
    law: BasePressureLaw,
    params: ScalingParams,
    eps0: float,
    forcing: VectorField | None = None,
) -> MeanPressureReport:
    """
    Direct |Omega|^-1 int_0^tau int p(rho) against its bound

        tau max_{[0, (rho_bar + varrho + eps0 D)/2]} p
            + 2/(rho_bar - varrho - eps0 D) (|Omega|^-1 |Bogovskii moment| + |J1|)

    with m = <rho_0>, the moment int int p(rho)(rho - m) evaluated through the
    momentum equation tested with B(rho - m), and
    J1 = |Omega|^-1 int int_{rho <= (rho_bar + m)/2} p(rho)(rho - m).

    Raises:
        ParameterError: If rho_bar - varrho - eps0 D <= 0
    """
    grid = trajectory[0].grid
    vol = grid.cell_volume
    volume = grid.volume
    times = np.array([s.t for s in trajectory])
    denominator = law.rho_bar - params.varrho - eps0 * params.D
    if not denominator > 0.0:
        raise ParameterError(f"Need rho_bar - varrho - eps0 D > 0, got {denominator}")
    m = trajectory[0].rho.mean()
    split = 0.5 * (law.rho_bar + m)
    identity = IdentityRenormalization()

    pressure_integral, moment, j1, rows = [], [], [], []
    for state in trajectory:
        rho = state.rho.values
        p = law.pressure(rho)
        pressure_integral.append(float(np.sum(p)) * vol / volume)
        moment.append(float(np.sum(p * (rho - m))) * vol)
        low = rho <= split
        j1.append(float(np.sum(p[low] * (rho[low] - m))) * vol / volume)
        rows.append(_bogovskii_terms(state, identity, law, params, forcing))

    direct = cumulative_time_integral(pressure_integral, times)
    moment_direct = cumulative_time_integral(moment, times)
    J1 = cumulative_time_integral(j1, times)
    integrated = sum(cumulative_time_integral([row[k] for row in rows], times) for k in _R2_KEYS if k != "mean_pressure")
    boundary = np.array([row["boundary"] for row in rows])
    moment_bog = params.eps**2 * (boundary - boundary[0] + integrated)

    z = np.linspace(0.0, 0.5 * (law.rho_bar + params.varrho + eps0 * params.D), 512)
    p_max = float(np.max(law.pressure(z)))
    bound = times * p_max + 2.0 / denominator * (np.abs(moment_bog) / volume + np.abs(J1))
    return MeanPressureReport(
        tau=times,
        direct=direct,
        bound=bound,
        moment_direct=moment_direct,
        moment_bogovskii=moment_bog,
        j1=J1,
        mean_density=float(m),
        denominator=float(denominator),
    )


# ============================================================================
# RATE BOUND
# ============================================================================

def epsilon_one(rho_bar: float, varrho: float, sup_s: float) -> float:
    """min(rho_bar - varrho, varrho) / sup|s|, keeping varrho + eps s inside (0, rho_bar)"""
    if sup_s <= 0.0:
        return math.inf
    return min(rho_bar - varrho, varrho) / sup_s


@dataclass(frozen=True)
class RateConstants:
    """Instantiation of the unquantified constants c(D,T), c2 and c"""

    c_DT: float = 1.0
    c2: float = 1.0
    c: float = 1.0

    def to_dict(self) -> dict:
        return {"c_DT": self.c_DT, "c2": self.c2, "c": self.c}


def rate_bound_rhs(
    params: ScalingParams,
    rho_bar: float,
    eps0: float,
    eps1: float,
    velocity_offset: float,
    density_offset: float,
    alpha: float,
    constants: RateConstants = RateConstants(),
) -> float:
    """
    Right-hand side of the final rate inequality

        [c(D,T)(eps^a + 1/R + nu + eps^2(1 + R^-2) + eps/nu) + c2 (du + drho)]
        x exp(c(D,T)(1 + eps^2 nu + eps^(4/3)/nu (1 + R^-4) + eps^2 + R^-2 + eps^2 R^-2)
              + c eps^2/(rho_bar - varrho - eps0 D) (1/(nu R) + c nu^(1/2) R^(-3/2) + 1))

    Raises:
        ParameterError: If eps is not in (0, min(eps0, eps1)), alpha not in (0, 1)
            or rho_bar - varrho - eps0 D <= 0
    """
    eps, nu, R = params.eps, params.nu, params.R
    ceiling = min(eps0, eps1)
    if not 0.0 < eps < ceiling:
        raise ParameterError(f"eps = {eps} must lie in (0, min(eps0, eps1)) = (0, {ceiling:.4g})")
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    denominator = rho_bar - params.varrho - eps0 * params.D
    if not denominator > 0.0:
        raise ParameterError(f"Need rho_bar - varrho - eps0 D > 0, got {denominator}")
    k = constants
    base = k.c_DT * (eps**alpha + 1.0 / R + nu + eps**2 * (1.0 + R**-2) + eps / nu) + k.c2 * (
        velocity_offset + density_offset
    )
    exponent = k.c_DT * (
        1.0 + eps**2 * nu + eps ** (4.0 / 3.0) / nu * (1.0 + R**-4) + eps**2 + R**-2 + eps**2 * R**-2
    ) + k.c * eps**2 / denominator * (1.0 / (nu * R) + k.c * math.sqrt(nu) * R**-1.5 + 1.0)
    return base * math.exp(exponent)


def calibrate_constants(
    gap: float,
    params: ScalingParams,
    rho_bar: float,
    eps0: float,
    eps1: float,
    velocity_offset: float,
    density_offset: float,
    alpha: float,
    safety: float = 2.0,
) -> RateConstants:
    """
    Smallest c(D,T) = c2 (with c = 1) whose bound covers safety x the measured gap

    The bound increases with the constant, so a bracketing root search suffices.
    """
    if gap <= 0.0:
        return RateConstants(c_DT=0.0, c2=0.0, c=1.0)

    def excess(c_DT: float) -> float:
        consts = RateConstants(c_DT=c_DT, c2=c_DT, c=1.0)
        rhs = rate_bound_rhs(params, rho_bar, eps0, eps1, velocity_offset, density_offset, alpha, consts)
        return math.log(rhs) - math.log(safety * gap)

    lo, hi = 1e-12, 1.0
    while excess(hi) < 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise ParameterError(f"No constant below 1e6 covers the gap {gap:.3e}")
    c_DT = brentq(excess, lo, hi, xtol=1e-14, rtol=1e-10)
    return RateConstants(c_DT=c_DT, c2=c_DT, c=1.0)


def gronwall_gamma(
    params: ScalingParams, initial_entropy: float, alpha: float, constants: RateConstants = RateConstants()
) -> float:
    """c E(0) + c(D,T)(eps^a + 1/R + 1/(eps R) + nu + eps^2 nu^2 (1 + R^-2) + eps/nu)"""
    eps, nu, R = params.eps, params.nu, params.R
    return constants.c * initial_entropy + constants.c_DT * (
        eps**alpha + 1.0 / R + 1.0 / (eps * R) + nu + eps**2 * nu**2 * (1.0 + R**-2) + eps / nu
    )


def gronwall_delta(
    trajectory: list[FluidState], law: BasePressureLaw, params: ScalingParams, constants: RateConstants = RateConstants()
) -> tuple[np.ndarray, np.ndarray]:
    """
    delta(t) = c(D,T)(|Omega|^-1 int p(rho) + eps^(4/3)/nu (1 + R^-4) + (1 + eps^2)(1 + R^-2) + eps^2 nu + 1)

    Returns:
        Tuple (delta per snapshot, running time integral)
    """
    eps, nu, R = params.eps, params.nu, params.R
    times = np.array([s.t for s in trajectory])
    fixed = eps ** (4.0 / 3.0) / nu * (1.0 + R**-4) + (1.0 + eps**2) * (1.0 + R**-2) + eps**2 * nu + 1.0
    mean_p = np.array([float(np.mean(law.pressure(s.rho.values))) for s in trajectory])
    delta = constants.c_DT * (mean_p + fixed)
    return delta, cumulative_time_integral(delta, times)


def gronwall_bound(gamma: float, delta_integral: np.ndarray) -> np.ndarray:
    """gamma exp(int_0^tau delta)"""
    return gamma * np.exp(np.asarray(delta_integral, dtype=float))
