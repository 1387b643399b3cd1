import math

import numpy as np
import pytest

from src.core.errors import GridError, GridMismatch, ParameterError, SyncError
from src.diagnostics.relent import (
    RateConstants,
    build_corrector,
    calibrate_constants,
    comparison_trajectory,
    corrector_norms,
    cutoff,
    density_control_check,
    epsilon_one,
    gronwall_bound,
    gronwall_delta,
    gronwall_gamma,
    initial_entropy_bound,
    limit_distance,
    mean_pressure_estimate,
    rate_bound_rhs,
    rei_check,
    relative_entropy,
)
from src.eos.renormalization import renorm_b
from src.fields import Boundary, GridSpec, ScalarField, VectorField
from src.solvers.acoustics import AcousticParams, solve_acoustic
from src.solvers.cns import ScalingParams, solve_cns

BOX = GridSpec.cube(1, 2.0, 64, Boundary.NOSLIP)
PARAMS = ScalingParams(eps=0.1, nu=0.1, R=2.0, D=1.0, varrho=1.5, T=0.04)
WIDTH = 0.5


@pytest.fixture(scope="module")
def coincident(reference_law):
    """A fluid at rest against a silent acoustic comparison: every remainder vanishes"""
    rho0 = ScalarField(BOX, np.full(BOX.shape, PARAMS.varrho))
    trajectory = solve_cns(rho0, VectorField.zeros(BOX), reference_law, PARAMS, emit_dt=0.01)
    periodic = GridSpec.cube(1, 4.0, 128)
    acoustic = solve_acoustic(
        ScalarField.zeros(periodic),
        VectorField.zeros(periodic),
        AcousticParams.from_law(reference_law, PARAMS.eps, PARAMS.varrho),
        T=PARAMS.T,
        emit_dt=0.01,
    )
    comparison = comparison_trajectory(BOX, acoustic, None, reference_law, WIDTH)
    return trajectory, comparison


# ============================================================================
# CORRECTOR
# ============================================================================

def test_cutoff_is_one_at_the_wall_and_zero_inside(noslip_1d):
    chi, (faces,) = cutoff(noslip_1d, 1.0)
    assert chi.values[0] == 1.0 and chi.values[-1] == 1.0
    assert chi.values[noslip_1d.shape[0] // 2] == 0.0
    assert faces[0] == 1.0 and faces[-1] == 1.0
    assert np.all((chi.values >= 0.0) & (chi.values <= 1.0))


@pytest.mark.parametrize("width", [0.1, 5.0])
def test_cutoff_width_must_fit_the_grid(noslip_1d, width):
    with pytest.raises(GridError):
        cutoff(noslip_1d, width)


def test_cutoff_needs_walls(periodic_2d):
    with pytest.raises(GridError):
        cutoff(periodic_2d, 1.0)


def test_corrector_cancels_the_boundary_velocity(noslip_1d):
    grad_psi0 = VectorField.with_walls(noslip_1d, [np.ones(noslip_1d.face_shape(0))])
    chi, w = build_corrector(VectorField.zeros(noslip_1d), grad_psi0, 1.0)
    total = (w + grad_psi0).components[0]
    faces = noslip_1d.faces(0)
    near_wall = 4.0 - np.abs(faces) <= 0.25
    np.testing.assert_allclose(total[near_wall], 0.0, atol=1e-15)
    np.testing.assert_allclose(total[np.abs(faces) < 2.9], 1.0)


def test_corrector_needs_one_grid(noslip_1d):
    with pytest.raises(GridMismatch):
        build_corrector(VectorField.zeros(noslip_1d), VectorField.zeros(BOX), 1.0)


def test_corrector_norms_table(coincident):
    _, comparison = coincident
    table = corrector_norms(comparison)
    assert list(table.columns) == ["t", "w_W2p", "dtw_Lp"]
    assert len(table) == 5
    assert (table[["w_W2p", "dtw_Lp"]] == 0.0).all().all()


# ============================================================================
# RELATIVE ENTROPY
# ============================================================================

def test_coincident_pair_has_zero_entropy(coincident, reference_law):
    trajectory, comparison = coincident
    for state, cmp in zip(trajectory, comparison):
        assert relative_entropy(state, cmp, reference_law, PARAMS.eps) == 0.0
        assert limit_distance(state, cmp, PARAMS.eps) == (0.0, 0.0)
        assert density_control_check(state, cmp, reference_law, 1.0)["passed"]


def test_relative_entropy_needs_one_grid(coincident, reference_law, noslip_1d):
    _, comparison = coincident
    rho = ScalarField(noslip_1d, np.full(noslip_1d.shape, 1.5))
    state = solve_cns(rho, VectorField.zeros(noslip_1d), reference_law, PARAMS, 0.01)[0]
    with pytest.raises(GridMismatch):
        relative_entropy(state, comparison[0], reference_law, PARAMS.eps)


def test_limit_distance_needs_synchronized_snapshots(coincident):
    trajectory, comparison = coincident
    with pytest.raises(SyncError):
        limit_distance(trajectory[1], comparison[0], PARAMS.eps)


def test_inequality_holds_for_the_coincident_pair(coincident, reference_law):
    trajectory, comparison = coincident
    report = rei_check(trajectory, comparison, reference_law, PARAMS, density_constant=1.0)
    assert report.passed
    np.testing.assert_array_equal(report.E, 0.0)
    assert all(pair["passed"] for pair in report.pairs.values())
    assert set(report.pairs) == {"pressure_energy", "acoustic_flux", "density_wave"}
    assert all(d["passed"] for d in report.density_control)
    frame = report.to_frame()
    assert list(frame.columns) == ["tau", "E", "dissipation", "pb_term", "R1", "R2", "R3", "lhs_minus_rhs"]
    assert report.to_dict()["passed"]


def test_inequality_with_renormalization(coincident, reference_law):
    trajectory, comparison = coincident
    b = renorm_b(reference_law, alpha1=0.6, m_div=0.0)
    report = rei_check(trajectory, comparison, reference_law, PARAMS, b)
    assert report.passed
    np.testing.assert_array_equal(report.pb_term, 0.0)
    assert "R2_transport" in report.breakdown


def test_inequality_needs_synchronized_runs(coincident, reference_law):
    trajectory, comparison = coincident
    with pytest.raises(SyncError):
        rei_check(trajectory, comparison[:-1], reference_law, PARAMS)


def test_initial_entropy_bound_vanishes_without_offsets(reference_law):
    assert initial_entropy_bound(reference_law, PARAMS, 0.25, 0.0, 0.0, 0.0) == 0.0
    assert initial_entropy_bound(reference_law, PARAMS, 0.25, 1.0, 0.0, 0.0) == pytest.approx(1.75)


# ============================================================================
# MEAN PRESSURE
# ============================================================================

def test_mean_pressure_of_a_fluid_at_rest(coincident, reference_law):
    trajectory, _ = coincident
    report = mean_pressure_estimate(trajectory, reference_law, PARAMS, eps0=0.25)
    assert report.direct[-1] == pytest.approx(0.3 * PARAMS.T, rel=1e-10)
    assert report.passed
    assert report.to_dict()["denominator"] == pytest.approx(1.25)


def test_mean_pressure_needs_room_below_the_barrier(coincident, reference_law):
    trajectory, _ = coincident
    with pytest.raises(ParameterError):
        mean_pressure_estimate(trajectory, reference_law, PARAMS, eps0=1.5)


# ============================================================================
# RATE BOUND
# ============================================================================

def test_epsilon_one():
    assert epsilon_one(3.0, 1.5, 0.0) == math.inf
    assert epsilon_one(3.0, 1.5, 0.5) == pytest.approx(3.0)
    assert epsilon_one(3.0, 2.0, 1.0) == pytest.approx(1.0)


def _path_params(eps):
    return ScalingParams(eps=eps, nu=eps ** (2.0 / 3.0), R=0.5 * eps**-1.5, D=1.0, varrho=1.5, T=1.0)


def test_rate_bound_decreases_along_the_path():
    values = [
        rate_bound_rhs(_path_params(eps), 3.0, 0.25, 1.0, 0.0, 0.0, 1.0 / 3.0)
        for eps in (0.1, 0.03, 0.01, 0.003, 0.001)
    ]
    assert all(b < a for a, b in zip(values, values[1:]))


def _rhs(eps=0.01, nu=0.5, R=500.0, alpha=1.0 / 3.0, du=1e-3, drho=1e-3):
    params = ScalingParams(eps=eps, nu=nu, R=R, D=1.0, varrho=1.5, T=0.5)
    return rate_bound_rhs(params, 3.0, 0.25, 1.0, du, drho, alpha)


@pytest.mark.parametrize(
    "change",
    [
        {"alpha": 1.0 / 3.0 - 1e-3},  # raises eps^alpha at fixed eps
        {"R": 499.0},
        {"nu": 0.501},
        {"du": 1.1e-3},
        {"drho": 1.1e-3},
    ],
    ids=["eps_alpha", "inverse_R", "nu", "velocity_offset", "density_offset"],
)
def test_rate_bound_grows_with_each_small_quantity(change):
    assert _rhs(**change) > _rhs()


def test_rate_bound_falls_in_nu_below_sqrt_eps():
    # the eps / nu term dominates while nu^2 < eps
    assert _rhs(nu=0.06) < _rhs(nu=0.05)


@pytest.mark.parametrize("eps, alpha", [(0.3, 1.0 / 3.0), (0.1, 1.0), (0.1, 0.0)])
def test_rate_bound_rejects_out_of_range_arguments(eps, alpha):
    with pytest.raises(ParameterError):
        rate_bound_rhs(_path_params(eps), 3.0, 0.25, 1.0, 0.0, 0.0, alpha)


def test_calibration_covers_twice_the_gap():
    params = _path_params(0.01)
    constants = calibrate_constants(1e-3, params, 3.0, 0.25, 1.0, 0.0, 0.0, 1.0 / 3.0)
    assert constants.c_DT == constants.c2 > 0.0
    rhs = rate_bound_rhs(params, 3.0, 0.25, 1.0, 0.0, 0.0, 1.0 / 3.0, constants)
    assert rhs == pytest.approx(2e-3, rel=1e-6)


def test_calibration_of_a_zero_gap():
    constants = calibrate_constants(0.0, _path_params(0.01), 3.0, 0.25, 1.0, 0.0, 0.0, 1.0 / 3.0)
    assert constants == RateConstants(c_DT=0.0, c2=0.0, c=1.0)


def test_gronwall_pieces(coincident, reference_law):
    trajectory, _ = coincident
    assert gronwall_gamma(PARAMS, 2.0, 1.0 / 3.0, RateConstants(c_DT=0.0, c2=0.0, c=1.0)) == 2.0
    delta, integral = gronwall_delta(trajectory, reference_law, PARAMS)
    assert integral[0] == 0.0
    assert integral[-1] == pytest.approx(delta[0] * PARAMS.T, rel=1e-12)
    np.testing.assert_allclose(gronwall_bound(2.0, np.array([0.0, 1.0])), [2.0, 2.0 * math.e])
