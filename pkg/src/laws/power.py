"""
Power Singularity Law
Tunable test law p(s) = a s^gamma / (rho_bar - s)^beta
"""

import numpy as np

from ..core.base_law import BasePressureLaw
from ..core.errors import ParameterError


class PowerSingularityLaw(BasePressureLaw):
    """Power-type pressure with a pole of order beta at the packing density"""

    VARIANT = "power"

    def __init__(
        self,
        a: float,
        gamma: float,
        beta: float,
        rho_bar: float,
        spline_nodes: int | None = None,
    ):
        """
        Initialize the power singularity law

        Args:
            a: Amplitude, a > 0
            gamma: Exponent at vanishing density, gamma >= 1
            beta: Pole exponent, beta > 5/2
            rho_bar: Packing density
            spline_nodes: Node count of the potential cache
        """
        if not a > 0:
            raise ParameterError(f"Amplitude a must be positive, got {a}")
        if not gamma >= 1:
            raise ParameterError(f"Exponent gamma must be at least 1, got {gamma}")
        self.a = float(a)
        self.gamma = float(gamma)
        super().__init__(rho_bar=rho_bar, beta=beta, spline_nodes=spline_nodes)

    @classmethod
    def get_parameter_names(cls) -> list[str]:
        return ["a", "gamma", "beta", "rho_bar"]

    def to_spec(self) -> dict:
        return {
            "variant": self.VARIANT,
            "a": self.a,
            "gamma": self.gamma,
            "beta": self.beta,
            "rho_bar": self.rho_bar,
        }

    def pole_coefficient(self) -> float:
        return self.a * self.rho_bar**self.gamma

    def _p(self, s):
        return self.a * s**self.gamma / (self.rho_bar - s) ** self.beta

    def _dp(self, s):
        gap = self.rho_bar - s
        return (
            self.a
            * s ** (self.gamma - 1.0)
            * (self.gamma * gap + self.beta * s)
            / gap ** (self.beta + 1.0)
        )

    def _d2p(self, s):
        a, g, b = self.a, self.gamma, self.beta
        gap = self.rho_bar - s
        # product rule on s^g * gap^(-b)
        if g == 1.0:
            curvature = 0.0
        else:
            curvature = g * (g - 1.0) * s ** (g - 2.0) / gap**b
        cross = 2.0 * g * s ** (g - 1.0) * b / gap ** (b + 1.0)
        pole = s**g * b * (b + 1.0) / gap ** (b + 2.0)
        return a * (curvature + cross + pole)

    def _small_density_integral(self, lo, hi):
        # p(z)/z^2 ~ a rho_bar^-b z^(g-2) (1 + b z / rho_bar)
        lo = np.asarray(lo, dtype=float)

        def power_integral(k):
            if k == -1.0:
                return np.log(hi / lo)
            return (hi ** (k + 1.0) - lo ** (k + 1.0)) / (k + 1.0)

        lead = self.a * self.rho_bar ** (-self.beta)
        return lead * (
            power_integral(self.gamma - 2.0)
            + self.beta / self.rho_bar * power_integral(self.gamma - 1.0)
        )
