"""
Renormalization Functions
The logarithmic barrier b, its truncations b_alpha and the identity b(s) = s
"""

from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np

from ..core.base_law import BasePressureLaw
from ..core.errors import CertificateError, ParameterError

logger = logging.getLogger(__name__)

ADMISSIBILITY_MARGIN = 1.01
GRID_POINTS = 4000


@dataclass(frozen=True)
class RenormFunction:
    """
    C^1 renormalization vanishing below rho_bar - alpha1

        b(s) = 0                          for s <= rho_bar - alpha1
        b(s) = A (s - rho_bar + alpha1)^k for rho_bar - alpha1 < s < rho_bar - alpha2
        b(s) = -log(rho_bar - s)          for s >= rho_bar - alpha2

    The power bridge matches value and slope of the logarithm at
    rho_bar - alpha2; k >= 2 keeps it convex. With a truncation alpha the
    function is frozen at b(rho_bar - alpha) above rho_bar - alpha.
    """

    law: BasePressureLaw = field(repr=False, compare=False)
    alpha1: float
    alpha2: float
    exponent: float
    amplitude: float
    admissibility: float = math.inf
    truncation: float | None = None

    @property
    def rho_bar(self) -> float:
        return self.law.rho_bar

    @property
    def onset(self) -> float:
        """Largest density where b vanishes"""
        return self.rho_bar - self.alpha1

    def _clip(self, s: np.ndarray) -> np.ndarray:
        if self.truncation is None:
            return s
        return np.minimum(s, self.rho_bar - self.truncation)

    def value(self, s):
        s = np.asarray(s, dtype=float)
        x = self._clip(s)
        x0 = self.rho_bar - self.alpha1
        x1 = self.rho_bar - self.alpha2
        bridge = self.amplitude * np.clip(x - x0, 0.0, None) ** self.exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            log_branch = -np.log(np.clip(self.rho_bar - x, 1e-300, None))
        out = np.where(x <= x0, 0.0, np.where(x < x1, bridge, log_branch))
        return float(out) if out.ndim == 0 else out

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        x = self._clip(s)
        x0 = self.rho_bar - self.alpha1
        x1 = self.rho_bar - self.alpha2
        bridge = self.amplitude * self.exponent * np.clip(x - x0, 0.0, None) ** (self.exponent - 1.0)
        with np.errstate(divide="ignore"):
            log_branch = 1.0 / np.clip(self.rho_bar - x, 1e-300, None)
        out = np.where(x <= x0, 0.0, np.where(x < x1, bridge, log_branch))
        if self.truncation is not None:
            out = np.where(s > self.rho_bar - self.truncation, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def __call__(self, s):
        return self.value(s)

    def truncated(self, alpha: float) -> "RenormFunction":
        """b_alpha, equal to b on [0, rho_bar - alpha] and constant above"""
        if not 0.0 < alpha < self.rho_bar:
            raise ParameterError(f"Truncation alpha must lie in (0, rho_bar), got {alpha}")
        return replace(self, truncation=float(alpha))

    def defect(self, s):
        """b'(s) s - b(s)"""
        s = np.asarray(s, dtype=float)
        return self.derivative(s) * s - self.value(s)

    def to_dict(self) -> dict:
        return {
            "kind": "log-barrier",
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "exponent": self.exponent,
            "amplitude": self.amplitude,
            "admissibility": self.admissibility,
            "truncation": self.truncation,
        }


class IdentityRenormalization:
    """b(s) = s; the renormalized equation reduces to the continuity equation"""

    truncation = None

    def value(self, s):
        return s if np.ndim(s) == 0 else np.asarray(s, dtype=float)

    def derivative(self, s):
        return 1.0 if np.ndim(s) == 0 else np.ones_like(np.asarray(s, dtype=float))

    def __call__(self, s):
        return self.value(s)

    def defect(self, s):
        return 0.0 if np.ndim(s) == 0 else np.zeros_like(np.asarray(s, dtype=float))

    def to_dict(self) -> dict:
        return {"kind": "identity"}


def _log_threshold(alpha1: float, m_div: float) -> float:
    """Largest halving of min(alpha1/2, exp(-8 M), 1/e) with alpha2 (1 + 2 log(1/alpha2)) <= alpha1"""
    alpha2 = min(0.5 * alpha1, math.exp(-8.0 * m_div), math.exp(-1.0))
    while alpha2 * (1.0 - 2.0 * math.log(alpha2)) > alpha1:
        alpha2 *= 0.5
        if alpha2 < 1e-300:
            raise CertificateError(f"No log threshold alpha2 fits below alpha1={alpha1}")
    return alpha2


def _sample_grid(rho_bar: float, alpha1: float, alpha2: float, n: int) -> np.ndarray:
    bulk = np.linspace(0.0, rho_bar - alpha1, n // 8, endpoint=False)
    bridge = np.linspace(rho_bar - alpha1, rho_bar - alpha2, n // 2, endpoint=False)
    pole = rho_bar - np.geomspace(alpha2, 1e-10 * rho_bar, n - n // 8 - n // 2)
    return np.concatenate([bulk, bridge, pole])


def renorm_b(
    law: BasePressureLaw, alpha1: float, m_div: float, grid_points: int = GRID_POINTS
) -> RenormFunction:
    """
    Assemble the logarithmic renormalization function

    alpha2 is taken so that -log(rho_bar - s) >= 8 m_div on (rho_bar - alpha2,
    rho_bar) and the C^1 power bridge from rho_bar - alpha1 has exponent >= 2.
    Monotonicity of b, b' and the admissibility ratio
    (|b'|^{5/2} + |b|^{5/2}) / (1 + p) are verified on a dense grid.

    Args:
        law: Pressure law
        alpha1: Onset threshold, usually from the pointwise bounds certificate
        m_div: Bound on the sup-norm of div(w_R + grad Psi)
        grid_points: Size of the verification grid

    Returns:
        RenormFunction with its fitted admissibility constant

    Raises:
        ParameterError: If alpha1 or m_div are out of range
        CertificateError: If monotonicity or admissibility fails on the grid
    """
    rho_bar = law.rho_bar
    if not 0.0 < alpha1 < rho_bar:
        raise ParameterError(f"alpha1 must lie in (0, rho_bar), got {alpha1}")
    if not m_div >= 0.0:
        raise ParameterError(f"Divergence bound must be nonnegative, got {m_div}")

    alpha2 = _log_threshold(alpha1, m_div)
    height = alpha1 - alpha2
    log_level = -math.log(alpha2)
    exponent = height / (alpha2 * log_level)
    amplitude = log_level / height**exponent
    b = RenormFunction(law=law, alpha1=alpha1, alpha2=alpha2, exponent=exponent, amplitude=amplitude)

    s = _sample_grid(rho_bar, alpha1, alpha2, grid_points)
    values = b.value(s)
    slopes = b.derivative(s)
    tail = s >= rho_bar - alpha1
    for name, arr in (("b", values[tail]), ("b'", slopes[tail])):
        drops = np.diff(arr) < -1e-12 * np.maximum(np.abs(arr[1:]), 1.0)
        if np.any(drops):
            raise CertificateError(f"{name} is not nondecreasing on [rho_bar - alpha1, rho_bar)")

    ratio = (np.abs(slopes) ** 2.5 + np.abs(values) ** 2.5) / (1.0 + law.pressure(s))
    pole_part = ratio[-(grid_points // 10):]
    if np.argmax(pole_part) == pole_part.size - 1 and pole_part[-1] > pole_part[0]:
        raise CertificateError(
            f"Admissibility ratio grows toward the pole ({pole_part[0]:.3e} -> {pole_part[-1]:.3e})"
        )
    admissibility = ADMISSIBILITY_MARGIN * float(ratio.max())

    logger.info(
        f"Renormalization b: alpha1={alpha1:.4e}, alpha2={alpha2:.4e}, "
        f"k={exponent:.3f}, c={admissibility:.3e}"
    )
    return replace(b, admissibility=admissibility)


def sup_divergence_bound(div_samples) -> float:
    """Sup-norm of sampled div(w_R + grad Psi) over all snapshots"""
    arrays = [np.abs(np.asarray(d, dtype=float)) for d in div_samples]
    return float(max((a.max() for a in arrays if a.size), default=0.0))
