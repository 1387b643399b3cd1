"""Pressure potential lemmas and renormalization functions"""

from .lemmas import (
    PotentialCertificate,
    initial_entropy_constant,
    l2_density_control_constant,
    pointwise_bounds_certificate,
    potential_identities_check,
    relative_potential,
)
from .renormalization import IdentityRenormalization, RenormFunction, renorm_b

__all__ = [
    "PotentialCertificate",
    "initial_entropy_constant",
    "l2_density_control_constant",
    "pointwise_bounds_certificate",
    "potential_identities_check",
    "relative_potential",
    "IdentityRenormalization",
    "RenormFunction",
    "renorm_b",
]
