"""
Carnahan-Starling Law
Hard-sphere fluid pressure with packing fraction eta = rho / rho_bar
"""

import numpy as np

from ..core.base_law import BasePressureLaw
from ..core.errors import ParameterError


class CarnahanStarlingLaw(BasePressureLaw):
    """
    Carnahan-Starling hard-sphere pressure

    p(rho) = kT rho (1 + eta + eta^2 - eta^3) / (1 - eta)^3, pole of order 3.
    """

    VARIANT = "cs"

    def __init__(self, kT: float, rho_bar: float, spline_nodes: int | None = None):
        """
        Initialize the Carnahan-Starling law

        Args:
            kT: Thermal energy scale, kT > 0
            rho_bar: Packing density
            spline_nodes: Node count of the potential cache
        """
        if not kT > 0:
            raise ParameterError(f"kT must be positive, got {kT}")
        self.kT = float(kT)
        super().__init__(rho_bar=rho_bar, beta=3.0, spline_nodes=spline_nodes)

    @classmethod
    def get_parameter_names(cls) -> list[str]:
        return ["kT", "rho_bar"]

    def to_spec(self) -> dict:
        return {"variant": self.VARIANT, "kT": self.kT, "rho_bar": self.rho_bar}

    def pole_coefficient(self) -> float:
        # (1 - eta)^3 = (rho_bar - s)^3 / rho_bar^3 and the numerator tends to 2
        return 2.0 * self.kT * self.rho_bar**4

    def _p(self, s):
        eta = s / self.rho_bar
        return self.kT * s * (1.0 + eta + eta**2 - eta**3) / (1.0 - eta) ** 3

    def _dp(self, s):
        eta = s / self.rho_bar
        numerator = 1.0 + 4.0 * eta + 4.0 * eta**2 - 4.0 * eta**3 + eta**4
        return self.kT * numerator / (1.0 - eta) ** 4

    def _d2p(self, s):
        eta = s / self.rho_bar
        return self.kT * (8.0 + 20.0 * eta - 4.0 * eta**2) / (self.rho_bar * (1.0 - eta) ** 5)

    def _small_density_integral(self, lo, hi):
        # p(z)/z^2 ~ kT (1/z + 4/rho_bar)
        lo = np.asarray(lo, dtype=float)
        return self.kT * (np.log(hi / lo) + 4.0 * (hi - lo) / self.rho_bar)
