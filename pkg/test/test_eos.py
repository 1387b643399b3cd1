import numpy as np
import pytest
from scipy.integrate import quad

from src.core.errors import DomainError, ParameterError
from src.core.law_factory import LawFactory
from src.eos.lemmas import (
    density_control_sides,
    initial_entropy_constant,
    l2_density_control_constant,
    pointwise_bounds_certificate,
    potential_identities_check,
    relative_potential,
    verify_certificate,
)
from src.eos.renormalization import IdentityRenormalization, renorm_b, sup_divergence_bound


# ============================================================================
# PRESSURE
# ============================================================================

def test_pressure_vanishes_at_zero_density(unit_law):
    assert unit_law.pressure(0.0) == 0.0


def test_pressure_closed_form(unit_law):
    assert unit_law.pressure(0.5) == pytest.approx(2.0, rel=1e-14)


def test_pressure_keeps_array_shape(unit_law):
    s = np.linspace(0.1, 0.9, 12).reshape(3, 4)
    assert unit_law.pressure(s).shape == (3, 4)


def test_carnahan_starling_is_monotone_near_the_pole(cs_law):
    assert cs_law.pressure(0.999) > cs_law.pressure(0.99)


def test_pressure_derivative_matches_central_differences(unit_law):
    dp, _ = unit_law.pressure_derivatives(0.5)
    h = 1e-5
    fd = (unit_law.pressure(0.5 + h) - unit_law.pressure(0.5 - h)) / (2.0 * h)
    assert dp == pytest.approx(fd, rel=1e-6)
    # 2 s / (1 - s)^3 + 3 s^2 / (1 - s)^4 at s = 1/2
    assert dp == pytest.approx(20.0, rel=1e-14)


@pytest.mark.parametrize("spec", ["unit_law", "cs_law", "reference_law"])
def test_pressure_is_increasing(spec, request):
    law = request.getfixturevalue(spec)
    dp, _ = law.pressure_derivatives(np.linspace(0.01, 0.99, 50) * law.rho_bar)
    assert np.all(dp > 0)


def test_reference_law_has_unit_sound_speed_at_background(reference_law):
    dp, _ = reference_law.pressure_derivatives(1.5)
    assert dp == pytest.approx(1.0, rel=1e-12)


def test_pole_coefficient_matches_the_limit(unit_law, cs_law):
    for law in (unit_law, cs_law):
        s = law.rho_bar * (1.0 - 1e-6)
        limit = law.pressure(s) * (law.rho_bar - s) ** law.beta
        assert limit == pytest.approx(law.pole_coefficient(), rel=1e-4)


@pytest.mark.parametrize("density", [-0.1, 1.0, 1.5, float("nan")])
def test_pressure_rejects_densities_outside_the_interval(unit_law, density):
    with pytest.raises(DomainError):
        unit_law.pressure(density)


def test_derivatives_reject_zero_density(unit_law):
    with pytest.raises(DomainError):
        unit_law.pressure_derivatives(0.0)


# ============================================================================
# FACTORY
# ============================================================================

def test_factory_lists_both_variants():
    assert {"power", "cs"} <= set(LawFactory.list_laws())
    info = LawFactory.get_law_info("cs")
    assert info["parameters"] == ["kT", "rho_bar"]


def test_factory_round_trips_the_spec(unit_law):
    assert LawFactory.create(unit_law.to_spec()).to_spec() == unit_law.to_spec()


def test_factory_rejects_unknown_variant():
    with pytest.raises(ValueError, match="not found"):
        LawFactory.create({"variant": "van-der-waals"})


def test_factory_rejects_missing_parameters():
    with pytest.raises(ValueError, match="missing"):
        LawFactory.create({"variant": "power", "a": 1.0, "gamma": 2.0, "rho_bar": 1.0})


def test_pole_exponent_must_exceed_five_halves():
    with pytest.raises(ParameterError):
        LawFactory.create({"variant": "power", "a": 1.0, "gamma": 2.0, "beta": 2.5, "rho_bar": 1.0})


# ============================================================================
# POTENTIAL
# ============================================================================

def test_potential_vanishes_at_the_anchor_and_at_zero(unit_law, cs_law):
    for law in (unit_law, cs_law):
        assert law.potential(0.5 * law.rho_bar) == 0.0
        assert law.potential(0.0) == 0.0


def test_potential_matches_closed_form(unit_law):
    # P(s) = s * int_{1/2}^{s} (1 - z)^-3 dz, which is 4.5 at s = 3/4
    assert unit_law.potential(0.75) == pytest.approx(4.5, rel=1e-10)
    assert unit_law.potential(np.array([0.75]))[0] == pytest.approx(4.5, rel=1e-7)


def test_potential_cache_agrees_with_quadrature(cs_law):
    s = np.array([1e-4, 0.02, 0.3, 0.6, 0.9, 0.995])
    cached = cs_law.potential(s)
    direct = np.array([cs_law.potential(float(v)) for v in s])
    np.testing.assert_allclose(cached, direct, rtol=1e-7, atol=1e-12)


@pytest.mark.parametrize("spec", ["unit_law", "cs_law"])
def test_potential_identities_hold(spec, request):
    law = request.getfixturevalue(spec)
    report = potential_identities_check(law, np.linspace(0.05, 0.95, 200) * law.rho_bar, tol=1e-6)
    assert report["passed"], report


def test_potential_identity_at_the_anchor(unit_law):
    s = 0.5
    dP, _ = unit_law.potential_derivatives(s)
    assert dP * s - unit_law.potential(s) == pytest.approx(unit_law.pressure(s), rel=1e-9)


# ============================================================================
# BREGMAN GAP AND CERTIFICATES
# ============================================================================

def test_relative_potential_vanishes_at_equal_arguments(unit_law):
    assert relative_potential(unit_law, 0.6, 0.6) == 0.0


def test_relative_potential_is_positive_off_the_diagonal(unit_law):
    rho = np.linspace(0.05, 0.95, 19)
    gap = relative_potential(unit_law, rho, 0.5)
    assert np.all(gap[np.abs(rho - 0.5) > 1e-9] > 0)


def test_relative_potential_matches_the_integral_remainder(unit_law):
    rho, r = 0.8, 0.5

    def integrand(z):
        dp, _ = unit_law.pressure_derivatives(z)
        return (rho - z) * dp / z

    expected, _ = quad(integrand, r, rho, epsabs=0.0, epsrel=1e-13)
    assert relative_potential(unit_law, rho, r) == pytest.approx(expected, rel=1e-8)


@pytest.fixture(scope="module")
def unit_certificate(unit_law):
    return pointwise_bounds_certificate(unit_law, 0.1, samples=200)


def test_certificate_has_positive_lower_constant(unit_certificate):
    assert unit_certificate.c_low > 0
    assert 0 < unit_certificate.alpha1 < unit_certificate.alpha0


def test_certificate_reverifies_on_its_dense_grid(unit_law, unit_certificate):
    failures = verify_certificate(unit_law, unit_certificate, 2 * unit_certificate.samples)
    assert not any(failures.values()), failures


def test_certificate_rejects_margin_outside_range(unit_law):
    with pytest.raises(ParameterError):
        pointwise_bounds_certificate(unit_law, 0.6)


def test_density_control_holds_on_random_fields(unit_law, unit_certificate):
    constant = l2_density_control_constant(unit_law, 0.1, unit_certificate)
    assert np.isfinite(constant)
    rng = np.random.default_rng(7)
    for _ in range(100):
        rho = rng.uniform(1e-3, 1.0 - 1e-3, 32)
        r = rng.uniform(0.1, 0.9, 32)
        lhs, rhs = density_control_sides(unit_law, rho, r, cell_volume=1.0 / 32)
        assert lhs <= constant * rhs


def test_density_control_with_one_cell_at_the_barrier(unit_law, unit_certificate):
    constant = l2_density_control_constant(unit_law, 0.1, unit_certificate)
    rho = np.full(16, 0.5)
    rho[3] = 1.0 - 1e-4
    lhs, rhs = density_control_sides(unit_law, rho, np.full(16, 0.5), cell_volume=1.0 / 16)
    assert lhs <= constant * rhs


def test_density_control_equal_fields(unit_law):
    lhs, rhs = density_control_sides(unit_law, np.full(8, 0.4), np.full(8, 0.4), cell_volume=0.125)
    assert lhs == 0.0 and rhs == 0.0


def test_initial_entropy_constant_covers_the_background(reference_law):
    K = initial_entropy_constant(reference_law, 1.5, 0.25, 2.0)
    assert K >= 1.0 / 1.5


def test_initial_entropy_constant_rejects_data_at_the_pole(reference_law):
    with pytest.raises(ParameterError):
        initial_entropy_constant(reference_law, 1.5, 1.0, 2.0)


# ============================================================================
# RENORMALIZATION
# ============================================================================

def test_renormalization_vanishes_below_onset(unit_law):
    b = renorm_b(unit_law, alpha1=0.2, m_div=0.0)
    assert b.alpha2 <= 0.1
    assert b.value(0.5) == 0.0
    assert b.derivative(0.79) == 0.0


def test_renormalization_is_log_barrier_near_the_pole(unit_law):
    b = renorm_b(unit_law, alpha1=0.2, m_div=0.0)
    s = 1.0 - 0.5 * b.alpha2
    assert b.value(s) == pytest.approx(-np.log(1.0 - s), rel=1e-12)


def test_renormalization_is_continuously_differentiable(unit_law):
    b = renorm_b(unit_law, alpha1=0.2, m_div=0.5)
    joint = 1.0 - b.alpha2
    delta = 1e-9
    assert b.value(joint - delta) == pytest.approx(b.value(joint + delta), rel=1e-6)
    assert b.derivative(joint - delta) == pytest.approx(b.derivative(joint + delta), rel=1e-5)


def test_renormalization_threshold_follows_divergence_bound(unit_law):
    loose = renorm_b(unit_law, alpha1=0.2, m_div=0.0)
    tight = renorm_b(unit_law, alpha1=0.2, m_div=2.0)
    assert tight.alpha2 < loose.alpha2
    assert -np.log(tight.alpha2) >= 16.0


def test_truncated_renormalization_is_frozen_above_the_cut(unit_law):
    b = renorm_b(unit_law, alpha1=0.2, m_div=0.0).truncated(1e-3)
    assert b.derivative(1.0 - 1e-4) == 0.0
    assert b.value(1.0 - 1e-4) == pytest.approx(b.value(1.0 - 1e-3))


def test_renormalization_rejects_bad_onset(unit_law):
    with pytest.raises(ParameterError):
        renorm_b(unit_law, alpha1=1.5, m_div=0.0)


def test_identity_renormalization_has_no_defect():
    b = IdentityRenormalization()
    s = np.linspace(0.1, 0.9, 5)
    np.testing.assert_array_equal(b.value(s), s)
    np.testing.assert_array_equal(b.defect(s), np.zeros(5))


def test_sup_divergence_bound_takes_the_largest_sample():
    assert sup_divergence_bound([np.array([0.1, -0.4]), np.array([0.3])]) == 0.4
    assert sup_divergence_bound([]) == 0.0


@pytest.fixture(scope="module")
def barrier(unit_law):
    return renorm_b(unit_law, alpha1=0.2, m_div=0.5)


def _dense(rho_bar):
    return np.concatenate([np.linspace(0.0, 0.99 * rho_bar, 20001), rho_bar * (1.0 - np.geomspace(1e-2, 1e-9, 2000))])


def test_renormalization_growth_is_bounded_by_the_pressure(unit_law, barrier):
    s = _dense(unit_law.rho_bar)
    growth = np.abs(barrier.derivative(s)) ** 2.5 + np.abs(barrier.value(s)) ** 2.5
    assert np.all(growth <= barrier.admissibility * (1.0 + unit_law.pressure(s)))


def test_renormalization_and_its_slope_are_nondecreasing(unit_law, barrier):
    s = _dense(unit_law.rho_bar)
    for values in (barrier.value(s), barrier.derivative(s)):
        steps = np.diff(values)
        assert np.all(steps >= -1e-9 * np.maximum(np.abs(values[1:]), 1.0))


def test_truncations_rise_as_alpha_decreases(unit_law, barrier):
    s = _dense(unit_law.rho_bar)
    full = barrier.value(s)
    previous = None
    for alpha in (1e-1, 1e-2, 1e-4, 1e-6, 1e-8):
        values = barrier.truncated(alpha).value(s)
        assert np.all(values <= full)
        if previous is not None:
            assert np.all(values >= previous)
        previous = values
    assert np.any(previous > barrier.truncated(1e-1).value(s))
