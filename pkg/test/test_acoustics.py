import math

import numpy as np
import pytest

from src.core.errors import CFLError, CurlError, GridMismatch, ParameterError, WindowError
from src.fields import Boundary, GridSpec, ScalarField, VectorField, grad
from src.fields.operators import compact_bump
from src.solvers.acoustics import (
    AcousticParams,
    acoustic_energy,
    acoustic_time_derivatives,
    decay_exponent,
    decay_table,
    leapfrog_limit,
    predicted_exponent,
    propagate,
    sample_on,
    solve_acoustic,
    solve_acoustic_radial,
)

PARAMS = AcousticParams(eps=0.5, varrho=1.5, c_p=1.0)


def _smooth_data(grid):
    x, y = grid.mesh()
    s0 = ScalarField(grid, np.cos(x) * np.cos(y))
    grad_psi0 = grad(ScalarField(grid, np.sin(2 * x)))
    return s0, grad_psi0


def test_parameters_must_be_positive():
    with pytest.raises(ParameterError):
        AcousticParams(eps=0.0, varrho=1.5, c_p=1.0)


def test_parameters_from_law(reference_law):
    params = AcousticParams.from_law(reference_law, eps=0.1, varrho=1.5)
    assert params.c_p == pytest.approx(1.0)
    assert params.speed == pytest.approx(10.0)


# ============================================================================
# SPECTRAL PROPAGATOR
# ============================================================================

def test_spectral_energy_is_conserved(periodic_2d):
    s0 = ScalarField(periodic_2d, compact_bump(periodic_2d.radius(), 1.5))
    trajectory = solve_acoustic(s0, VectorField.zeros(periodic_2d), PARAMS, T=1.0, emit_dt=0.1)
    energies = np.array([acoustic_energy(state) for state in trajectory])
    assert len(trajectory) == 11
    np.testing.assert_allclose(energies, energies[0], rtol=1e-10)


def test_propagator_is_reversible(periodic_2d):
    s0, grad_psi0 = _smooth_data(periodic_2d)
    (state,) = solve_acoustic(s0, grad_psi0, PARAMS, T=0.0, emit_dt=0.1)
    back = propagate(propagate(state, 0.37), -0.37)
    np.testing.assert_allclose(back.s.values, state.s.values, atol=1e-12)
    np.testing.assert_allclose(back.psi.values, state.psi.values, atol=1e-12)
    assert back.t == pytest.approx(0.0)


def test_time_derivatives_match_the_propagator(periodic_2d):
    s0, grad_psi0 = _smooth_data(periodic_2d)
    (state,) = solve_acoustic(s0, grad_psi0, PARAMS, T=0.0, emit_dt=0.1)
    delta = 1e-5
    ahead, behind = propagate(state, delta), propagate(state, -delta)
    ds, dgrad = acoustic_time_derivatives(state)
    np.testing.assert_allclose((ahead.s.values - behind.s.values) / (2 * delta), ds.values, atol=1e-6)
    for a, b, d in zip(ahead.grad_psi.components, behind.grad_psi.components, dgrad.components):
        np.testing.assert_allclose((a - b) / (2 * delta), d, atol=1e-6)


def test_propagate_needs_a_periodic_grid(noslip_1d):
    s0 = ScalarField.zeros(noslip_1d)
    (state,) = solve_acoustic(s0, VectorField.zeros(noslip_1d), PARAMS, T=0.0, emit_dt=0.1)
    with pytest.raises(GridMismatch):
        propagate(state, 0.1)


def test_initial_velocity_must_be_a_gradient(periodic_2d):
    x, y = periodic_2d.mesh()
    vortex = VectorField(periodic_2d, (np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)))
    with pytest.raises(CurlError):
        solve_acoustic(ScalarField.zeros(periodic_2d), vortex, PARAMS, T=0.1, emit_dt=0.1)


def test_initial_fields_must_share_a_grid(periodic_2d, noslip_2d):
    with pytest.raises(GridMismatch):
        solve_acoustic(ScalarField.zeros(periodic_2d), VectorField.zeros(noslip_2d), PARAMS, 0.1, 0.1)


# ============================================================================
# LEAPFROG
# ============================================================================

def test_leapfrog_conserves_its_modified_energy(noslip_1d):
    s0 = ScalarField(noslip_1d, compact_bump(noslip_1d.radius(), 1.0))
    trajectory = solve_acoustic(s0, VectorField.zeros(noslip_1d), PARAMS, T=1.0, emit_dt=0.25)
    energies = np.array([acoustic_energy(state) for state in trajectory])
    assert all(state.dt for state in trajectory)
    np.testing.assert_allclose(energies, energies[0], rtol=1e-10)
    # the pulse has left its initial support
    assert np.max(np.abs(trajectory[-1].s.values - s0.values)) > 0.1


def test_leapfrog_conserves_mass(noslip_2d):
    s0 = ScalarField(noslip_2d, compact_bump(noslip_2d.radius(), 0.6))
    trajectory = solve_acoustic(s0, VectorField.zeros(noslip_2d), PARAMS, T=0.2, emit_dt=0.1)
    assert trajectory[-1].s.integral() == pytest.approx(s0.integral(), rel=1e-12)


def test_leapfrog_limit_formula(noslip_2d):
    expected = 0.9 * noslip_2d.h * PARAMS.eps / math.sqrt(PARAMS.c_p * 2)
    assert leapfrog_limit(noslip_2d, PARAMS) == pytest.approx(expected)


def test_leapfrog_rejects_unstable_steps(noslip_1d):
    with pytest.raises(CFLError):
        solve_acoustic(
            ScalarField.zeros(noslip_1d), VectorField.zeros(noslip_1d), PARAMS, T=0.1, emit_dt=0.1, dt=1.0
        )


def test_sample_on_a_noslip_sub_box():
    source = GridSpec.cube(1, 4.0, 128)
    target = GridSpec.cube(1, 2.0, 64, Boundary.NOSLIP)
    s0 = ScalarField(source, compact_bump(source.radius(), 1.0))
    (state,) = solve_acoustic(s0, VectorField.zeros(source), PARAMS, T=0.0, emit_dt=0.1)
    cropped = sample_on(state, target)
    assert cropped.grid == target
    assert cropped.grad_psi.grid == target
    assert cropped.s.values.max() == pytest.approx(s0.values.max())


# ============================================================================
# DECAY
# ============================================================================

def test_predicted_exponents():
    assert predicted_exponent(2.0) == 0.0
    assert predicted_exponent(4.0) == pytest.approx(-0.5)
    assert predicted_exponent(math.inf) == -1.0


@pytest.fixture(scope="module")
def short_radial():
    params = AcousticParams(eps=1.0, varrho=1.5, c_p=1.0)
    return solve_acoustic_radial(lambda r: compact_bump(r, 1.0), params, T=5.0, emit_dt=0.5, extent=16.0, cells=512)


def test_radial_solution_starts_from_the_profile(short_radial):
    np.testing.assert_allclose(short_radial.s[0], compact_bump(short_radial.r, 1.0), atol=1e-12)
    assert short_radial.times[-1] == 5.0


def test_radial_reduction_needs_even_cells():
    with pytest.raises(ParameterError):
        solve_acoustic_radial(lambda r: r, PARAMS, T=1.0, emit_dt=0.5, extent=8.0, cells=513)


def test_decay_fit_needs_a_spanned_window(short_radial):
    with pytest.raises(WindowError):
        decay_exponent(short_radial, 4.0)


def test_decay_fit_needs_q_of_at_least_two(short_radial):
    with pytest.raises(ParameterError):
        decay_exponent(short_radial, 1.5)


def test_decay_table_columns(short_radial):
    table = decay_table(short_radial, 4.0)
    assert list(table.columns) == ["tau", "Lq_norm", "fitted_slope"]
    assert len(table) == 11


@pytest.mark.slow
def test_three_dimensional_pulse_decays_at_the_dispersive_rate():
    params = AcousticParams(eps=1.0, varrho=1.5, c_p=1.0)
    trajectory = solve_acoustic_radial(
        lambda r: compact_bump(r, 1.0), params, T=100.0, emit_dt=2.0, extent=128.0, cells=4096
    )
    fit = decay_exponent(trajectory, 4.0)
    assert fit.samples >= 40
    assert fit.within(0.1), fit
