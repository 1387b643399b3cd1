"""Acoustic, incompressible Euler and compressible Navier-Stokes solvers"""

from .acoustics import (
    AcousticParams,
    AcousticState,
    DecayFit,
    RadialTrajectory,
    acoustic_energy,
    acoustic_time_derivatives,
    decay_exponent,
    decay_table,
    propagate,
    propagation_violation,
    sample_on,
    solve_acoustic,
    solve_acoustic_radial,
)
from .cns import FluidState, LedgerRow, ScalingParams, ledger_frame, solve_cns, stable_step, viscous_force
from .euler import (
    EulerState,
    compact_vortex,
    euler_invariants,
    euler_pressure,
    euler_time_derivative,
    momentum_residual,
    pressure_time_derivative,
    random_band_limited,
    sample_on_faces,
    solve_euler,
    spectral_tail,
    taylor_green,
)
from .timeline import check_synchronized, emission_times

__all__ = [
    "AcousticParams",
    "AcousticState",
    "DecayFit",
    "RadialTrajectory",
    "acoustic_energy",
    "acoustic_time_derivatives",
    "decay_exponent",
    "decay_table",
    "propagate",
    "propagation_violation",
    "sample_on",
    "solve_acoustic",
    "solve_acoustic_radial",
    "FluidState",
    "LedgerRow",
    "ScalingParams",
    "ledger_frame",
    "solve_cns",
    "stable_step",
    "viscous_force",
    "EulerState",
    "compact_vortex",
    "euler_invariants",
    "euler_pressure",
    "euler_time_derivative",
    "momentum_residual",
    "pressure_time_derivative",
    "random_band_limited",
    "sample_on_faces",
    "solve_euler",
    "spectral_tail",
    "taylor_green",
    "check_synchronized",
    "emission_times",
]
