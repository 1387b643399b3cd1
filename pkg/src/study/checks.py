"""
Module Self-Checks
Small fixed experiments run by `hardsphere-lab run --only <check>`
"""

import logging
import math
from pathlib import Path
from typing import Callable

import numpy as np

from ..core.errors import ParameterError
from ..core.law_factory import LawFactory
from ..diagnostics.weak_solution import (
    default_test_family,
    energy_inequality_residual,
    fit_power,
    renormalized_residual,
)
from ..eos.lemmas import (
    density_control_sides,
    l2_density_control_constant,
    pointwise_bounds_certificate,
    potential_identities_check,
    verify_certificate,
)
from ..eos.renormalization import IdentityRenormalization, renorm_b
from ..fields.bogovskii import bogovskii, divergence_residual, norm_ratio
from ..fields.grid import Boundary, GridSpec, ScalarField, VectorField
from ..fields.operators import compact_bump, grad
from ..solvers.acoustics import (
    AcousticParams,
    acoustic_energy,
    decay_exponent,
    decay_table,
    propagation_violation,
    solve_acoustic,
    solve_acoustic_radial,
)
from ..solvers.cns import ScalingParams, solve_cns
from ..solvers.euler import (
    euler_invariants,
    euler_pressure,
    momentum_residual,
    solve_euler,
    taylor_green,
)
from ..utils.export import DataExporter

logger = logging.getLogger(__name__)

REFERENCE_LAWS = (
    {"variant": "power", "a": 0.45, "gamma": 2.0, "beta": 3.0, "rho_bar": 3.0},
    {"variant": "cs", "kT": 1.0, "rho_bar": 1.0},
)

_CHECKS: dict[str, Callable[[Path | None], dict]] = {}


def register_check(name: str):
    """Register a self-check under its command-line name"""

    def decorator(func):
        _CHECKS[name] = func
        return func

    return decorator


def list_checks() -> list[str]:
    return list(_CHECKS.keys())


def run_checks(only: str | None = None, out_dir=None) -> dict:
    """
    Run one self-check or all of them

    Args:
        only: Registered check name; None runs every check
        out_dir: Optional directory for tables some checks write

    Returns:
        Mapping check name -> report, each with a 'passed' flag

    Raises:
        ParameterError: If only names no registered check
    """
    if only is not None and only not in _CHECKS:
        raise ParameterError(f"Unknown check '{only}'. Available checks: {list_checks()}")
    names = [only] if only else list_checks()
    out = Path(out_dir) if out_dir is not None else None
    results = {}
    for name in names:
        logger.info(f"Running self-check {name}")
        try:
            results[name] = _CHECKS[name](out)
        except Exception as e:
            logger.error(f"Self-check {name} raised {type(e).__name__}: {e}")
            results[name] = {"passed": False, "error": str(e), "error_type": type(e).__name__}
        logger.info(f"Self-check {name}: {'passed' if results[name]['passed'] else 'FAILED'}")
    return results


# ============================================================================
# EOS
# ============================================================================

@register_check("eos-identities")
def check_eos_identities(out_dir: Path | None = None) -> dict:
    reports = []
    for spec in REFERENCE_LAWS:
        law = LawFactory.create(spec)
        s = np.linspace(0.05, 0.95, 200) * law.rho_bar
        reports.append(potential_identities_check(law, s, tol=1e-6))
    return {"laws": reports, "passed": all(r["passed"] for r in reports)}


@register_check("eos-certificate")
def check_eos_certificate(out_dir: Path | None = None, trials: int = 100, seed: int = 0) -> dict:
    """Certificate of the reference law, its re-verification and random density-control draws"""
    law = LawFactory.create(REFERENCE_LAWS[0])
    alpha0 = 0.1 * law.rho_bar
    certificate = pointwise_bounds_certificate(law, alpha0, samples=200)
    failures = verify_certificate(law, certificate, samples=500)
    constant = l2_density_control_constant(law, alpha0, certificate)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        rho = rng.uniform(1e-3, 1.0 - 1e-3, 64) * law.rho_bar
        r = rng.uniform(alpha0, law.rho_bar - alpha0, 64)
        lhs, rhs = density_control_sides(law, rho, r, cell_volume=1.0 / 64)
        worst = max(worst, lhs / (constant * rhs))
    return {
        "certificate": certificate.to_dict(),
        "failures": failures,
        "density_constant": constant,
        "worst_density_ratio": worst,
        "passed": not any(failures.values()) and worst <= 1.0,
    }


# ============================================================================
# ACOUSTICS
# ============================================================================

@register_check("acoustic-conservation")
def check_acoustic_conservation(out_dir: Path | None = None) -> dict:
    """Spectral energy drift on a periodic line and the finite propagation speed of a compact pulse"""
    grid = GridSpec.cube(1, 8.0, 2048)
    params = AcousticParams(eps=0.1, varrho=1.5, c_p=1.0)
    s0 = ScalarField(grid, compact_bump(grid.radius(), 2.0))
    zero = VectorField.zeros(grid)

    long_run = solve_acoustic(s0, zero, params, T=1.0, emit_dt=0.1)
    energies = np.array([acoustic_energy(state) for state in long_run])
    drift = float(np.max(np.abs(energies - energies[0])) / energies[0])

    short_run = solve_acoustic(s0, zero, params, T=0.05, emit_dt=0.005)
    violation = propagation_violation(short_run, 2.0)
    return {
        "energy_drift": drift,
        "propagation_violation": violation,
        "passed": drift < 1e-10 and violation < 1e-12,
    }


@register_check("acoustic-decay")
def check_acoustic_decay(out_dir: Path | None = None) -> dict:
    """L^q decay of a radial 3D pulse over tau/eps in [10, 100]"""
    params = AcousticParams(eps=1.0, varrho=1.5, c_p=1.0)
    trajectory = solve_acoustic_radial(
        lambda r: compact_bump(r, 1.0), params, T=100.0, emit_dt=2.0, extent=128.0, cells=4096
    )
    fits = {}
    passed = True
    for q, tolerance in ((4.0, 0.1), (8.0, 0.15)):
        fit = decay_exponent(trajectory, q)
        fits[f"q={q:g}"] = {"slope": fit.slope, "stderr": fit.stderr, "predicted": fit.predicted}
        passed = passed and fit.within(tolerance)
        if out_dir is not None:
            DataExporter.export_to_csv(decay_table(trajectory, q, fit), out_dir / f"decay_q{q:g}.csv")
    return {"fits": fits, "passed": passed}


# ============================================================================
# EULER
# ============================================================================

@register_check("euler-suite")
def check_euler_suite(out_dir: Path | None = None) -> dict:
    """Taylor-Green stays steady, invariants are conserved and the recovered pressure closes the momentum equation"""
    grid = GridSpec.cube(2, math.pi, 64)
    v0 = taylor_green(grid)
    trajectory = solve_euler(v0, T=1.0, emit_dt=0.25)
    steady = max(
        max(float(np.max(np.abs(a - b))) for a, b in zip(state.v.components, v0.components))
        for state in trajectory
    )
    energy0, enstrophy0 = euler_invariants(trajectory[0])
    drift = max(
        max(abs(e - energy0) / energy0, abs(z - enstrophy0) / enstrophy0)
        for e, z in (euler_invariants(state) for state in trajectory)
    )
    residual = momentum_residual(v0, VectorField.zeros(grid), euler_pressure(v0)).sup() / v0.sup() ** 2
    return {
        "steady_deviation": steady,
        "invariant_drift": drift,
        "momentum_residual": residual,
        "passed": steady < 1e-8 and drift < 1e-8 and residual < 1e-9,
    }


# ============================================================================
# BOGOVSKII
# ============================================================================

@register_check("bogovskii-suite")
def check_bogovskii_suite(out_dir: Path | None = None, resolutions=(32, 64, 128)) -> dict:
    """Divergence residual, zero wall trace and a resolution-independent norm ratio on the unit box"""
    rows = []
    for n in resolutions:
        grid = GridSpec.cube(2, 1.0, n, Boundary.NOSLIP)
        x, y = grid.mesh()
        f = ScalarField(grid, np.sin(np.pi * x) * np.cos(0.5 * np.pi * y))
        B = bogovskii(f)
        trace = max(
            float(np.max(np.abs(np.take(c, [0, -1], axis=axis)))) for axis, c in enumerate(B.components)
        )
        rows.append(
            {"cells": n, "residual": divergence_residual(f, B), "trace": trace, "ratio": norm_ratio(f, B)}
        )
    ratios = [row["ratio"] for row in rows]
    return {
        "resolutions": rows,
        "passed": all(row["residual"] < 1e-8 and row["trace"] == 0.0 for row in rows)
        and max(ratios) <= 2.0 * min(ratios),
    }


# ============================================================================
# CNS
# ============================================================================

@register_check("cns-diagnostics")
def check_cns_diagnostics(out_dir: Path | None = None, resolutions=(128, 256, 512)) -> dict:
    """
    Mass conservation, the energy inequality and the renormalized residuals under refinement

    The renormalized residual is fitted against h for b(s) = s and for a
    barrier renormalization whose onset lies below the attained densities;
    both slopes must be 1 +- 0.3. The energy residual must shrink in
    magnitude as the grid is refined.
    """
    law = LawFactory.create(REFERENCE_LAWS[0])
    params = ScalingParams(eps=0.1, nu=0.1, R=4.0, D=1.0, varrho=1.5, T=0.1)
    renormalizations = {
        "identity": IdentityRenormalization(),
        "barrier": renorm_b(law, alpha1=law.rho_bar - params.varrho + 0.1, m_div=0.0),
    }
    rows = []
    for n in resolutions:
        grid = GridSpec.cube(1, params.R, n, Boundary.NOSLIP)
        rho0 = ScalarField(grid, params.varrho + params.eps * compact_bump(grid.radius(), params.D))
        trajectory = solve_cns(rho0, VectorField.zeros(grid), law, params, emit_dt=0.01)
        mass = [state.ledger.mass for state in trajectory]
        tests = default_test_family(grid, params.T)
        row = {
            "cells": n,
            "h": grid.h,
            "mass_drift": abs(mass[-1] - mass[0]) / mass[0],
            "energy_residual": energy_inequality_residual(trajectory),
        }
        for name, b in renormalizations.items():
            row[f"renormalized_residual_{name}"] = renormalized_residual(trajectory, b, tests)
        rows.append(row)

    h = [row["h"] for row in rows]
    slopes = {}
    for name in renormalizations:
        slopes[name], _ = fit_power(h, [row[f"renormalized_residual_{name}"] for row in rows])
    energy = [abs(row["energy_residual"]) for row in rows]
    return {
        "resolutions": rows,
        "renormalized_slopes": slopes,
        "passed": all(row["mass_drift"] < 1e-12 and row["energy_residual"] <= 1e-3 for row in rows)
        and all(b < a for a, b in zip(energy, energy[1:]))
        and all(abs(slope - 1.0) <= 0.3 for slope in slopes.values()),
    }
