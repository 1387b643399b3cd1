"""
Timeline Helpers
Emission schedules and step splitting shared by the time-dependent solvers
"""

import math

import numpy as np

from ..core.errors import ParameterError, SyncError

TIME_TOL = 1e-9


def emission_times(T: float, emit_dt: float) -> np.ndarray:
    """Times 0, emit_dt, 2 emit_dt, ... up to T, with T itself always included"""
    if not T >= 0.0:
        raise ParameterError(f"Horizon must be nonnegative, got {T}")
    if not emit_dt > 0.0:
        raise ParameterError(f"Emission interval must be positive, got {emit_dt}")
    count = int(math.floor(T / emit_dt + TIME_TOL))
    times = emit_dt * np.arange(count + 1)
    if T - times[-1] > TIME_TOL * max(T, 1.0):
        times = np.append(times, T)
    else:
        times[-1] = T if count else times[-1]
    return times


def substeps(interval: float, dt_max: float) -> tuple[int, float]:
    """Number of equal steps no longer than dt_max covering interval, and their length"""
    if interval <= 0.0:
        return 0, 0.0
    n = max(1, int(math.ceil(interval / dt_max - TIME_TOL)))
    return n, interval / n


def check_synchronized(a, b, what: str = "trajectories") -> None:
    """Raise SyncError unless two time sequences agree"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or not np.allclose(a, b, rtol=0.0, atol=TIME_TOL * max(1.0, float(np.max(np.abs(a), initial=0.0)))):
        raise SyncError(f"Snapshot times of the {what} disagree: {a[:5]}... vs {b[:5]}...")
