"""
Rate Reports
Per-eps gap table of a study and the log-log rate fits
"""

from dataclasses import asdict, dataclass, field
import logging

import numpy as np
import pandas as pd

from ..core.errors import FitError
from ..diagnostics.weak_solution import fit_power

logger = logging.getLogger(__name__)

RATE_COLUMNS = ["eps", "nu", "R", "sup_vel_gap", "sup_dens_gap", "rhs_bound", "rei_pass"]
MIN_FIT_ROWS = 3


@dataclass(frozen=True)
class RateRow:
    eps: float
    nu: float
    R: float
    sup_vel_gap: float
    sup_dens_gap: float
    rhs_bound: float
    rei_pass: bool


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    points: int

    def to_dict(self) -> dict:
        return asdict(self)


def fit_rate(eps, gaps) -> RateFit:
    """
    Least-squares slope of log gap against log eps

    Raises:
        FitError: With fewer than three rows or a non-positive gap
    """
    eps = np.asarray(eps, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if eps.size < MIN_FIT_ROWS:
        raise FitError(f"A rate fit needs at least {MIN_FIT_ROWS} rows, got {eps.size}")
    if np.any(~np.isfinite(gaps)) or np.any(gaps <= 0.0):
        raise FitError(f"Rate fit needs positive gaps, got {gaps.tolist()}")
    slope, stderr = fit_power(eps, gaps)
    return RateFit(slope=slope, stderr=stderr, points=int(eps.size))


@dataclass
class RateReport:
    """Rows sorted by eps descending, the fitted slopes and the pass flags"""

    rows: list[RateRow] = field(default_factory=list)
    velocity_fit: RateFit | None = None
    density_fit: RateFit | None = None
    failed: list[dict] = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: -r.eps)

    @property
    def passed(self) -> bool:
        return bool(self.flags) and all(self.flags.values())

    def to_frame(self) -> pd.DataFrame:
        """rates.csv rows; an empty report keeps the header"""
        return pd.DataFrame([asdict(r) for r in self.rows], columns=RATE_COLUMNS)

    def to_dict(self) -> dict:
        return {
            "rows": [asdict(r) for r in self.rows],
            "velocity_fit": self.velocity_fit.to_dict() if self.velocity_fit else None,
            "density_fit": self.density_fit.to_dict() if self.density_fit else None,
            "failed": self.failed,
            "flags": self.flags,
            "notes": self.notes,
            "passed": self.passed,
        }


def _decreasing(values) -> bool:
    """Monotone decrease as eps decreases"""
    return all(b <= a for a, b in zip(values, values[1:]))


def summarize(rows: list[RateRow], failed: list[dict] | None = None, extra_flags: dict | None = None) -> RateReport:
    """
    Assemble a RateReport: fit both gaps when possible and set the pass flags

    Flags: no failed point, rei_check passed everywhere, both sup gaps
    nonincreasing as eps decreases; a successful fit adds a positive-slope flag.
    """
    report = RateReport(rows=rows, failed=list(failed or []))
    rows = report.rows
    eps = [r.eps for r in rows]
    flags = {
        "all_points_completed": not report.failed,
        "rei_pass": all(r.rei_pass for r in rows),
        "velocity_gap_decreasing": _decreasing([r.sup_vel_gap for r in rows]),
        "density_gap_decreasing": _decreasing([r.sup_dens_gap for r in rows]),
    }
    for name, gaps in (("velocity", [r.sup_vel_gap for r in rows]), ("density", [r.sup_dens_gap for r in rows])):
        try:
            fit = fit_rate(eps, gaps)
        except FitError as e:
            report.notes.append(f"{name} gap not fitted: {e}")
            continue
        setattr(report, f"{name}_fit", fit)
        flags[f"{name}_slope_positive"] = fit.slope > 0.0
        logger.info(f"Fitted {name} gap rate {fit.slope:.3f} +- {fit.stderr:.3f} over {fit.points} points")
    flags.update(extra_flags or {})
    report.flags = {k: bool(v) for k, v in flags.items()}
    return report
