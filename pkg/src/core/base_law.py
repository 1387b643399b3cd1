"""
Base Pressure Law
Abstract base class for singular hard-sphere equations of state
"""

from abc import ABC, abstractmethod
import logging
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import BPoly
from scipy.special import expit, logit, roots_legendre

from . import settings
from .errors import DomainError, ParameterError, QuadratureError

logger = logging.getLogger(__name__)

QUAD_RTOL = 1e-12
SMALL_DENSITY_FRACTION = 1e-3
CEILING_FRACTION = 1e-12
SPLINE_TOP_GAP = 1e-9
_GAUSS_POINTS, _GAUSS_WEIGHTS = roots_legendre(8)


class BasePressureLaw(ABC):
    """
    Abstract base class for pressure laws with a pole at the packing density

    Concrete laws provide p, p' and p'' and an analytic expansion of the
    integrand p(z)/z**2 near z = 0. The base class builds the pressure
    potential P(s) = s * Q(s), Q(s) = int_{rho_bar/2}^{s} p(z)/z**2 dz,
    by adaptive quadrature for scalar queries and from a cached quintic
    Hermite spline of Q for field-sized queries.

    Instances are immutable after construction and safe to share.
    """

    VARIANT: str = ""

    def __init__(self, rho_bar: float, beta: float, spline_nodes: int | None = None):
        """
        Initialize the common part of a pressure law

        Args:
            rho_bar: Packing density, the pole of p
            beta: Exponent of the pole, p ~ (rho_bar - s)**(-beta)
            spline_nodes: Node count of the potential cache (default: LAB_SPLINE_NODES)

        Raises:
            ParameterError: If rho_bar <= 0 or beta <= 5/2
        """
        if not np.isfinite(rho_bar) or rho_bar <= 0:
            raise ParameterError(f"rho_bar must be positive, got {rho_bar}")
        if not beta > 2.5:
            raise ParameterError(
                f"Pole exponent beta must exceed 5/2 for {type(self).__name__}, got {beta}"
            )
        self._rho_bar = float(rho_bar)
        self._beta = float(beta)
        self._ceiling = self._rho_bar * (1.0 - CEILING_FRACTION)
        self._small = self._rho_bar * SMALL_DENSITY_FRACTION
        self._nodes = int(spline_nodes or settings.SPLINE_NODES)
        self._build_potential_cache()

    @property
    def rho_bar(self) -> float:
        return self._rho_bar

    @property
    def beta(self) -> float:
        return self._beta

    @property
    def ceiling(self) -> float:
        """Largest density accepted by field operations"""
        return self._ceiling

    # ------------------------------------------------------------------
    # Variant hooks
    # ------------------------------------------------------------------

    @abstractmethod
    def _p(self, s: np.ndarray) -> np.ndarray:
        """Pressure on [0, rho_bar), no domain checks"""

    @abstractmethod
    def _dp(self, s: np.ndarray) -> np.ndarray:
        """First derivative on [0, rho_bar), no domain checks"""

    @abstractmethod
    def _d2p(self, s: np.ndarray) -> np.ndarray:
        """Second derivative on (0, rho_bar), no domain checks"""

    @abstractmethod
    def _small_density_integral(self, lo: np.ndarray, hi: float) -> np.ndarray:
        """
        Integral of p(z)/z**2 over [lo, hi] from the small-density expansion

        Args:
            lo: Lower limits, 0 < lo <= hi
            hi: Upper limit below the small-density switch

        Returns:
            Expansion value of the integral for every lower limit
        """

    @abstractmethod
    def pole_coefficient(self) -> float:
        """Limit of p(s) * (rho_bar - s)**beta as s approaches rho_bar"""

    @abstractmethod
    def to_spec(self) -> dict:
        """Serializable law specification as used in study configs"""

    @classmethod
    @abstractmethod
    def get_parameter_names(cls) -> list[str]:
        """
        Get the parameter names of this law variant

        Returns:
            List of parameter names (e.g., ['a', 'gamma', 'beta', 'rho_bar'])
        """

    # ------------------------------------------------------------------
    # Domain checks
    # ------------------------------------------------------------------

    def check_density(self, s, open_left: bool = False) -> np.ndarray:
        arr = np.asarray(s, dtype=float)
        lower_bad = arr <= 0 if open_left else arr < 0
        bad = ~np.isfinite(arr) | lower_bad | (arr >= self._ceiling)
        if np.any(bad):
            offending = arr[bad].flat[0] if arr.ndim else float(arr)
            interval = "(0" if open_left else "[0"
            raise DomainError(
                f"Density {offending} outside {interval}, {self._rho_bar}) for {self.VARIANT} law"
            )
        return arr

    @staticmethod
    def _unwrap(arr: np.ndarray):
        return float(arr) if arr.ndim == 0 else arr

    # ------------------------------------------------------------------
    # Pressure
    # ------------------------------------------------------------------

    def pressure(self, s):
        """
        Evaluate the pressure

        Args:
            s: Density or array of densities in [0, rho_bar)

        Returns:
            p(s), same shape as s

        Raises:
            DomainError: If any density is negative or at/above the ceiling
        """
        arr = self.check_density(s)
        return self._unwrap(self._p(arr))

    def pressure_derivatives(self, s):
        """
        Evaluate p'(s) and p''(s)

        Args:
            s: Density or array of densities in (0, rho_bar)

        Returns:
            Tuple (p', p'')

        Raises:
            DomainError: Outside (0, rho_bar)
        """
        arr = self.check_density(s, open_left=True)
        return self._unwrap(self._dp(arr)), self._unwrap(self._d2p(arr))

    # ------------------------------------------------------------------
    # Potential cache
    # ------------------------------------------------------------------

    def _integrand(self, z: np.ndarray) -> np.ndarray:
        return self._p(z) / z**2

    def _build_potential_cache(self) -> None:
        x_lo = logit(SMALL_DENSITY_FRACTION)
        x_hi = logit(1.0 - SPLINE_TOP_GAP)
        left = max(8, int(round(self._nodes * (-x_lo) / (x_hi - x_lo))))
        right = max(8, self._nodes - left + 1)
        x = np.concatenate([np.linspace(x_lo, 0.0, left), np.linspace(0.0, x_hi, right)[1:]])
        anchor = left - 1

        # Gauss-Legendre on each interval in the logistic coordinate
        mid = 0.5 * (x[1:] + x[:-1])
        half = 0.5 * (x[1:] - x[:-1])
        xq = mid[:, None] + half[:, None] * _GAUSS_POINTS[None, :]
        sig = expit(xq)
        zq = self._rho_bar * sig
        jac = self._rho_bar * sig * expit(-xq)
        pieces = (self._integrand(zq) * jac) @ _GAUSS_WEIGHTS * half

        q = np.zeros_like(x)
        q[anchor + 1:] = np.cumsum(pieces[anchor:])
        q[:anchor] = -np.cumsum(pieces[:anchor][::-1])[::-1]

        s_nodes = self._rho_bar * expit(x)
        s_nodes[anchor] = 0.5 * self._rho_bar
        p_nodes = self._p(s_nodes)
        dq = p_nodes / s_nodes**2
        d2q = self._dp(s_nodes) / s_nodes**2 - 2.0 * p_nodes / s_nodes**3

        self._s_lo = float(s_nodes[0])
        self._s_hi = float(s_nodes[-1])
        self._q_lo = float(q[0])
        self._q_spline = BPoly.from_derivatives(
            s_nodes, np.column_stack([q, dq, d2q]), extrapolate=False
        )
        self._dq_spline = self._q_spline.derivative(1)
        self._d2q_spline = self._q_spline.derivative(2)
        logger.debug(
            f"Built potential cache for {self.VARIANT} law with {s_nodes.size} nodes "
            f"on [{self._s_lo:.3e}, {self._s_hi:.12f}]"
        )

    # ------------------------------------------------------------------
    # Potential by quadrature
    # ------------------------------------------------------------------

    def _quad(self, func, lo: float, hi: float) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            try:
                value, abserr = quad(func, lo, hi, epsabs=0.0, epsrel=QUAD_RTOL, limit=400)
            except IntegrationWarning as e:
                raise QuadratureError(f"Adaptive quadrature on [{lo}, {hi}] failed: {e}")
        if not np.isfinite(value) or abserr > 1e3 * QUAD_RTOL * max(abs(value), 1e-300):
            raise QuadratureError(
                f"Adaptive quadrature on [{lo}, {hi}] reached error {abserr:.3e} for value {value}"
            )
        return value

    def _q_by_quadrature(self, s: float) -> float:
        """Q(s) = int_{rho_bar/2}^{s} p(z)/z**2 dz"""
        half = 0.5 * self._rho_bar
        if s == half:
            return 0.0
        if s > half:
            # z = rho_bar - (rho_bar/2) e^{-y}
            y_end = np.log(half / (self._rho_bar - s))

            def upper(y):
                z = self._rho_bar - half * np.exp(-y)
                return float(self._p(np.asarray(z)) / z**2 * (self._rho_bar - z))

            return self._quad(upper, 0.0, y_end)

        def lower(y):
            # z = (rho_bar/2) e^{-y}
            z = half * np.exp(-y)
            return float(self._p(np.asarray(z)) / z)

        if s >= self._small:
            return -self._quad(lower, 0.0, np.log(half / s))
        q_small = -self._quad(lower, 0.0, np.log(half / self._small))
        return q_small - float(self._small_density_integral(np.asarray(s), self._small))

    def _q_array(self, arr: np.ndarray) -> np.ndarray:
        """Q on densities in (0, ceiling), spline inside the cache range"""
        out = np.empty_like(arr)
        inside = (arr >= self._s_lo) & (arr <= self._s_hi)
        out[inside] = self._q_spline(arr[inside])
        below = arr < self._s_lo
        if np.any(below):
            out[below] = self._q_lo - self._small_density_integral(arr[below], self._s_lo)
        above = arr > self._s_hi
        if np.any(above):
            out[above] = [self._q_by_quadrature(float(v)) for v in arr[above]]
        return out

    def potential(self, s):
        """
        Evaluate the pressure potential P(s) = s * int_{rho_bar/2}^{s} p(z)/z**2 dz

        Scalars use adaptive quadrature with relative tolerance 1e-12;
        arrays use the cached spline of Q.

        Args:
            s: Density or array of densities in [0, rho_bar)

        Returns:
            P(s), same shape as s

        Raises:
            DomainError: Outside [0, rho_bar)
            QuadratureError: If the adaptive quadrature misses its tolerance
        """
        arr = self.check_density(s)
        if arr.ndim == 0:
            value = float(arr)
            if value == 0.0:
                return 0.0
            return value * self._q_by_quadrature(value)
        out = np.zeros_like(arr)
        positive = arr > 0
        out[positive] = arr[positive] * self._q_array(arr[positive])
        return out

    def potential_derivatives(self, s):
        """
        Evaluate P'(s) and P''(s) from the cached spline

        Args:
            s: Density or array of densities in (0, rho_bar)

        Returns:
            Tuple (P', P'')
        """
        arr = np.atleast_1d(self.check_density(s, open_left=True))
        dp1 = np.empty_like(arr)
        dp2 = np.empty_like(arr)
        inside = (arr >= self._s_lo) & (arr <= self._s_hi)
        si = arr[inside]
        q = self._q_spline(si)
        dq = self._dq_spline(si)
        dp1[inside] = q + si * dq
        dp2[inside] = 2.0 * dq + si * self._d2q_spline(si)
        outside = ~inside
        if np.any(outside):
            so = arr[outside]
            dp1[outside] = self._q_array(so) + self._p(so) / so
            dp2[outside] = self._dp(so) / so
        if np.ndim(s) == 0:
            return float(dp1[0]), float(dp2[0])
        return dp1.reshape(np.shape(s)), dp2.reshape(np.shape(s))

    def potential_third_derivative(self, s):
        """P'''(s) = p''(s)/s - p'(s)/s**2"""
        arr = self.check_density(s, open_left=True)
        return self._unwrap(self._d2p(arr) / arr - self._dp(arr) / arr**2)

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.to_spec().items() if k != "variant")
        return f"{type(self).__name__}({params})"
