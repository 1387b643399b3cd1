"""
Potential Lemmas
Identity checks, Bregman gap of the pressure potential and the
pointwise bounds certificate for a pressure law
"""

from dataclasses import asdict, dataclass
import logging

import numpy as np

from ..core.base_law import BasePressureLaw
from ..core.errors import CertificateError, ParameterError

logger = logging.getLogger(__name__)

TAYLOR_SWITCH = 1e-4
CERTIFICATE_SAMPLES = 500
FIT_MARGIN_LOW = 0.95
FIT_MARGIN_UP = 1.05
MAX_HALVINGS = 30


def potential_identities_check(law: BasePressureLaw, s_grid, tol: float = 1e-6) -> dict:
    """
    Check P'(s)s - P(s) = p(s) and P''(s) = p'(s)/s on a density grid

    P' and P'' come from the spline cache, p and p' are analytic. Residuals
    are relative to max(|p|, 1) and max(|p'/s|, 1) respectively.

    Args:
        law: Pressure law
        s_grid: Densities in (0, rho_bar)
        tol: Pass threshold for both residuals

    Returns:
        Report with the maximal residuals, their locations and the pass flag
    """
    s = law.check_density(np.atleast_1d(s_grid), open_left=True)
    P = law.potential(s)
    dP, d2P = law.potential_derivatives(s)
    p = law.pressure(s)
    dp, _ = law.pressure_derivatives(s)

    first = np.abs(dP * s - P - p) / np.maximum(np.abs(p), 1.0)
    second = np.abs(d2P - dp / s) / np.maximum(np.abs(dp / s), 1.0)
    i, j = int(np.argmax(first)), int(np.argmax(second))

    report = {
        "law": law.to_spec(),
        "nodes": int(s.size),
        "tol": tol,
        "max_identity_residual": float(first[i]),
        "argmax_identity": float(s[i]),
        "max_curvature_residual": float(second[j]),
        "argmax_curvature": float(s[j]),
    }
    report["passed"] = bool(first[i] <= tol and second[j] <= tol)
    logger.debug(f"Potential identities on {s.size} nodes: {report}")
    return report


def _bregman_gap(P_rho, P_r, dP_r, d2P_r, d3P_r, rho, r, rho_bar):
    d = rho - r
    gap = P_rho - P_r - dP_r * d
    near = np.abs(d) < TAYLOR_SWITCH * np.minimum(r, rho_bar - r)
    taylor = 0.5 * d2P_r * d**2 + d3P_r * d**3 / 6.0
    return np.where(near, taylor, gap)


def relative_potential(law: BasePressureLaw, rho, r):
    """
    Bregman gap P(rho) - P(r) - P'(r)(rho - r) of the pressure potential

    Arguments broadcast against each other. Pairs closer than
    1e-4 * min(r, rho_bar - r) use the third-order Taylor expansion.

    Args:
        law: Pressure law
        rho: Densities in [0, rho_bar)
        r: Reference densities in (0, rho_bar)

    Returns:
        Nonnegative gap, broadcast shape of the arguments

    Raises:
        DomainError: If rho or r leave their intervals
    """
    rho_a = law.check_density(rho)
    r_a = law.check_density(r, open_left=True)
    scalar = rho_a.ndim == 0 and r_a.ndim == 0
    rho_b, r_b = np.broadcast_arrays(np.atleast_1d(rho_a), np.atleast_1d(r_a))

    if scalar:
        P_rho = law.potential(float(rho_a))
        P_r = law.potential(float(r_a))
    else:
        P_rho = law.potential(np.ascontiguousarray(rho_b))
        P_r = law.potential(np.ascontiguousarray(r_b))
    dP_r, d2P_r = law.potential_derivatives(np.ascontiguousarray(r_b))
    d3P_r = law.potential_third_derivative(np.ascontiguousarray(r_b))

    gap = _bregman_gap(P_rho, P_r, dP_r, d2P_r, d3P_r, rho_b, r_b, law.rho_bar)
    gap = np.maximum(gap, 0.0)
    if scalar:
        return float(gap.reshape(-1)[0])
    return gap


@dataclass(frozen=True)
class PotentialCertificate:
    """Explicit constants of the three-branch bounds on the Bregman and pressure gaps"""

    alpha0: float
    alpha1: float
    c_low: float
    c_up: float
    rho_bar: float
    samples: int
    halvings: int

    def to_dict(self) -> dict:
        return asdict(self)


class _GapTables:
    """Bregman and pressure gaps on a (rho, r) sample product grid"""

    def __init__(self, law: BasePressureLaw, rho: np.ndarray, r: np.ndarray):
        self.rho = rho[:, None]
        self.r = r[None, :]

        P_rho = law.potential(rho)[:, None]
        P_r = law.potential(r)[None, :]
        dP_r, d2P_r = (v[None, :] for v in law.potential_derivatives(r))
        d3P_r = law.potential_third_derivative(r)[None, :]
        self.gap = _bregman_gap(P_rho, P_r, dP_r, d2P_r, d3P_r, self.rho, self.r, law.rho_bar)

        p_rho = law.pressure(rho)
        p_r = law.pressure(r)
        dp_r, _ = law.pressure_derivatives(r)
        self.p_rho = p_rho[:, None]
        self.P_rho = P_rho
        self.p_r = p_r[None, :]
        self.dp_r = dp_r[None, :]
        self.pgap = self.p_rho - self.p_r - self.dp_r * (self.rho - self.r)
        self.slack = 1e-10 * (1.0 + np.abs(self.p_rho) + np.abs(self.p_r))


def _density_samples(law: BasePressureLaw, alpha1: float, n: int) -> np.ndarray:
    """Linear samples on [0, rho_bar - alpha1] and geometric ones toward the pole"""
    rho_bar = law.rho_bar
    linear = np.linspace(0.0, rho_bar - alpha1, n // 2, endpoint=False)
    tail = rho_bar - np.geomspace(alpha1, 1e-8 * rho_bar, n - n // 2)
    out = np.unique(np.concatenate([linear, tail, [alpha1]]))
    return out[out < law.ceiling]


def _check_branches(tables: _GapTables, alpha1: float, rho_bar: float, c_low, c_up) -> dict:
    rho, r = tables.rho[:, 0], tables.r
    low = rho <= alpha1
    high = rho >= rho_bar - alpha1
    mid = ~(low | high)
    d2 = (tables.rho - tables.r) ** 2
    failures = {}

    if np.any(low):
        g, pg = tables.gap[low], tables.pgap[low]
        slack = tables.slack[low]
        bad = (g < 0.5 * tables.p_r - slack) | (pg > 1.0 + tables.dp_r * r - tables.p_r + slack)
        failures["low"] = int(np.count_nonzero(bad))
    if np.any(mid):
        g, pg, dd = tables.gap[mid], tables.pgap[mid], d2[mid]
        slack = tables.slack[mid]
        bad = (g < c_low * dd - slack) | (pg > c_up * dd + slack)
        failures["middle"] = int(np.count_nonzero(bad))
    if np.any(high):
        g, pg = tables.gap[high], tables.pgap[high]
        P_high = tables.P_rho[high]
        slack = tables.slack[high]
        bad = (g < 0.5 * P_high - slack) | (pg > 2.0 * tables.p_rho[high] + slack)
        bad |= np.broadcast_to(0.5 * P_high <= 1.0, bad.shape)
        failures["high"] = int(np.count_nonzero(bad))
    return failures


def _fit_constants(tables: _GapTables, alpha1: float, rho_bar: float) -> tuple[float, float]:
    rho = tables.rho[:, 0]
    mid = (rho > alpha1) & (rho < rho_bar - alpha1)
    d2 = (tables.rho[mid] - tables.r) ** 2
    usable = d2 > (1e-6 * rho_bar) ** 2
    ratio_low = tables.gap[mid][usable] / d2[usable]
    ratio_up = tables.pgap[mid][usable] / d2[usable]
    return FIT_MARGIN_LOW * float(ratio_low.min()), FIT_MARGIN_UP * float(ratio_up.max())


def pointwise_bounds_certificate(
    law: BasePressureLaw,
    alpha0: float,
    samples: int = CERTIFICATE_SAMPLES,
    max_halvings: int = MAX_HALVINGS,
) -> PotentialCertificate:
    """
    Search alpha1 and constants for the three-branch gap bounds

    For r in [alpha0, rho_bar - alpha0] the certificate asserts
        gap >= p(r)/2,              pgap <= 1 + p'(r) r - p(r)   for rho in [0, alpha1]
        gap >= c_low (rho - r)^2,   pgap <= c_up (rho - r)^2     for rho in (alpha1, rho_bar - alpha1)
        gap >= P(rho)/2 > 1,        pgap <= 2 p(rho)             for rho in [rho_bar - alpha1, rho_bar)
    where gap is the Bregman gap of P and pgap = p(rho) - p(r) - p'(r)(rho - r).
    alpha1 runs over alpha0 / 2^k; the constants are fitted on a samples x samples
    grid and must then hold on a grid of twice the density.

    Args:
        law: Pressure law
        alpha0: Margin of the reference densities, 0 < alpha0 < rho_bar/2
        samples: Sample count per axis of the fitting grid
        max_halvings: Largest k tried

    Returns:
        PotentialCertificate

    Raises:
        ParameterError: If alpha0 leaves (0, rho_bar/2)
        CertificateError: If no alpha1 validates
    """
    rho_bar = law.rho_bar
    if not 0.0 < alpha0 < 0.5 * rho_bar:
        raise ParameterError(f"alpha0 must lie in (0, rho_bar/2) = (0, {0.5 * rho_bar}), got {alpha0}")

    r_fit = np.linspace(alpha0, rho_bar - alpha0, samples)
    r_check = np.linspace(alpha0, rho_bar - alpha0, 2 * samples)

    for k in range(1, max_halvings + 1):
        alpha1 = alpha0 / 2.0**k
        fit = _GapTables(law, _density_samples(law, alpha1, samples), r_fit)
        c_low, c_up = _fit_constants(fit, alpha1, rho_bar)
        if c_low <= 0 or not np.isfinite(c_up):
            continue
        if any(_check_branches(fit, alpha1, rho_bar, c_low, c_up).values()):
            continue
        check = _GapTables(law, _density_samples(law, alpha1, 2 * samples), r_check)
        failures = _check_branches(check, alpha1, rho_bar, c_low, c_up)
        if any(failures.values()):
            logger.debug(f"alpha1={alpha1:.4e} failed the dense check: {failures}")
            continue
        logger.info(
            f"Certificate for {law!r}: alpha1={alpha1:.4e}, c_low={c_low:.4e}, c_up={c_up:.4e}"
        )
        return PotentialCertificate(
            alpha0=float(alpha0),
            alpha1=float(alpha1),
            c_low=c_low,
            c_up=c_up,
            rho_bar=rho_bar,
            samples=samples,
            halvings=k,
        )

    raise CertificateError(
        f"No alpha1 in alpha0/2^k, k <= {max_halvings}, validates the gap bounds for {law!r}"
    )


def verify_certificate(law: BasePressureLaw, certificate: PotentialCertificate, samples: int) -> dict:
    """
    Re-evaluate the three branches of a certificate on a fresh grid

    Returns:
        Failure count per branch (all zero for a valid certificate)
    """
    r = np.linspace(certificate.alpha0, law.rho_bar - certificate.alpha0, samples)
    tables = _GapTables(law, _density_samples(law, certificate.alpha1, samples), r)
    return _check_branches(tables, certificate.alpha1, law.rho_bar, certificate.c_low, certificate.c_up)


def l2_density_control_constant(
    law: BasePressureLaw, alpha0: float, certificate: PotentialCertificate | None = None
) -> float:
    """
    Constant C with ||rho - r||^2 <= C int gap(rho, r) for r in [alpha0, rho_bar - alpha0]

    C = max(2 rho_bar^2 / p(alpha0), 1/c_low, 4 rho_bar^2).

    Raises:
        CertificateError: If no certificate exists for alpha0
    """
    if certificate is None or certificate.alpha0 != alpha0:
        certificate = pointwise_bounds_certificate(law, alpha0)
    rho_bar = law.rho_bar
    return float(
        max(2.0 * rho_bar**2 / law.pressure(alpha0), 1.0 / certificate.c_low, 4.0 * rho_bar**2)
    )


def density_control_sides(law: BasePressureLaw, rho, r, cell_volume: float) -> tuple[float, float]:
    """Discrete ||rho - r||^2 and int gap(rho, r) with uniform cell weights"""
    rho = np.asarray(rho, dtype=float)
    r = np.asarray(r, dtype=float)
    lhs = float(np.sum((rho - r) ** 2) * cell_volume)
    rhs = float(np.sum(relative_potential(law, rho, r)) * cell_volume)
    return lhs, rhs


def initial_entropy_constant(law: BasePressureLaw, varrho: float, eps0: float, D: float) -> float:
    """K = max p'(z)/z over [varrho, varrho + eps0 D]"""
    top = varrho + eps0 * D
    if not 0.0 < varrho < top < law.rho_bar:
        raise ParameterError(
            f"Need 0 < varrho < varrho + eps0 D < rho_bar, got varrho={varrho}, top={top}"
        )
    z = np.linspace(varrho, top, 512)
    dp, _ = law.pressure_derivatives(z)
    return float(np.max(dp / z))
