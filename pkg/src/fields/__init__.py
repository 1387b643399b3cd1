"""Grids, discrete fields and their operators"""

from .bogovskii import bogovskii, divergence_residual, norm_ratio
from .grid import Boundary, GridSpec, ScalarField, VectorField
from .operators import (
    compact_bump,
    curl,
    dissipation_density,
    div,
    grad,
    laplacian,
    sobolev_norm,
    stress_tensor,
    velocity_gradient,
)
from .poisson import biot_savart, helmholtz_decompose, helmholtz_project, solve_poisson

__all__ = [
    "Boundary",
    "GridSpec",
    "ScalarField",
    "VectorField",
    "bogovskii",
    "divergence_residual",
    "norm_ratio",
    "compact_bump",
    "curl",
    "dissipation_density",
    "div",
    "grad",
    "laplacian",
    "sobolev_norm",
    "stress_tensor",
    "velocity_gradient",
    "biot_savart",
    "helmholtz_decompose",
    "helmholtz_project",
    "solve_poisson",
]
