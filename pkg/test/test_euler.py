import numpy as np
import pytest

from src.core.errors import CFLError, GridError, ParameterError, ResolutionError
from src.fields import ScalarField, VectorField, div
from src.fields.grid import GridSpec
from src.solvers.euler import (
    compact_vortex,
    euler_invariants,
    euler_pressure,
    euler_time_derivative,
    momentum_residual,
    pressure_time_derivative,
    random_band_limited,
    solve_euler,
    spectral_tail,
    taylor_green,
)


def test_taylor_green_is_steady(periodic_2d):
    v0 = taylor_green(periodic_2d)
    trajectory = solve_euler(v0, T=0.5, emit_dt=0.25)
    assert [state.t for state in trajectory] == [0.0, 0.25, 0.5]
    for state in trajectory:
        for a, b in zip(state.v.components, v0.components):
            np.testing.assert_allclose(a, b, atol=1e-10)


def test_taylor_green_pressure(periodic_2d):
    x, y = periodic_2d.mesh()
    Pi = euler_pressure(taylor_green(periodic_2d))
    np.testing.assert_allclose(Pi.values, (np.cos(2 * x) + np.cos(2 * y)) / 4.0, atol=1e-12)


def test_recovered_pressure_closes_the_momentum_equation(periodic_2d):
    v0 = taylor_green(periodic_2d)
    residual = momentum_residual(v0, VectorField.zeros(periodic_2d), euler_pressure(v0))
    assert residual.sup() < 1e-10


def test_mean_flow_translates_the_vorticity(periodic_2d):
    x, y = periodic_2d.mesh()
    v0 = taylor_green(periodic_2d) + VectorField(periodic_2d, (np.full(x.shape, 0.5), np.zeros(x.shape)))
    trajectory = solve_euler(v0, T=0.5, emit_dt=0.5)
    final = trajectory[-1]
    np.testing.assert_allclose(final.omega.values, 2.0 * np.sin(x - 0.25) * np.sin(y), atol=1e-6)
    assert np.mean(final.v.components[0]) == pytest.approx(0.5)
    assert np.mean(final.v.components[1]) == pytest.approx(0.0, abs=1e-14)


def test_time_derivative_stays_solenoidal(periodic_2d):
    v = random_band_limited(periodic_2d, seed=2)
    assert div(euler_time_derivative(v)).norm(np.inf) < 1e-9


def test_random_field_is_scaled_to_the_amplitude(periodic_2d):
    v = random_band_limited(periodic_2d, seed=5, amplitude=0.7)
    assert np.max(v.magnitude()) == pytest.approx(0.7, rel=1e-12)
    assert div(v).norm(np.inf) < 1e-10


def test_invariants_are_conserved():
    grid = GridSpec.cube(2, np.pi, 64)
    trajectory = solve_euler(random_band_limited(grid, seed=1), T=0.5, emit_dt=0.25)
    energy0, enstrophy0 = euler_invariants(trajectory[0])
    for state in trajectory[1:]:
        energy, enstrophy = euler_invariants(state)
        assert energy == pytest.approx(energy0, rel=1e-4)
        assert enstrophy == pytest.approx(enstrophy0, rel=1e-4)


def test_pressure_time_derivative_of_a_steady_flow_vanishes(periodic_2d):
    trajectory = solve_euler(taylor_green(periodic_2d), T=0.5, emit_dt=0.25)
    rates = pressure_time_derivative(trajectory)
    assert len(rates) == 3
    assert max(float(np.max(np.abs(r.values))) for r in rates) < 1e-8


def test_spectral_tail_of_zero_is_zero(periodic_2d):
    assert spectral_tail(ScalarField.zeros(periodic_2d)) == 0.0


def test_solver_needs_a_periodic_plane(noslip_2d):
    with pytest.raises(GridError):
        taylor_green(noslip_2d)
    with pytest.raises(GridError):
        euler_pressure(VectorField.zeros(noslip_2d))


def test_vortex_must_fit_in_the_box(periodic_2d):
    with pytest.raises(ParameterError):
        compact_vortex(periodic_2d, radius=4.0)


def test_compact_vortex_is_solenoidal(periodic_2d):
    v = compact_vortex(periodic_2d, radius=2.0)
    assert div(v).norm(np.inf) < 1e-10
    assert v.sup() > 0.0


def test_tail_limit_aborts_the_run(periodic_2d):
    with pytest.raises(ResolutionError):
        solve_euler(taylor_green(periodic_2d), T=0.25, emit_dt=0.25, tail_limit=-1.0)


def test_fixed_step_is_checked_against_the_cfl_limit(periodic_2d):
    with pytest.raises(CFLError):
        solve_euler(taylor_green(periodic_2d), T=0.25, emit_dt=0.25, dt=10.0)
