"""
Study Runner
Runs every sweep point of a validated study and aggregates the rate report
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt

from ..core import settings
from ..core.errors import CFLError, DensityError, FitError, ParameterError
from ..diagnostics.relent import (
    RateConstants,
    calibrate_constants,
    comparison_trajectory,
    corrector_norms,
    gronwall_bound,
    gronwall_delta,
    gronwall_gamma,
    initial_entropy_bound,
    limit_distance,
    mean_pressure_estimate,
    rate_bound_rhs,
    rei_check,
)
from ..eos.lemmas import l2_density_control_constant, pointwise_bounds_certificate
from ..eos.renormalization import renorm_b, sup_divergence_bound
from ..fields.grid import Boundary
from ..fields.operators import crop_scalar, crop_vector, div
from ..solvers.acoustics import AcousticParams, solve_acoustic
from ..solvers.cns import ledger_frame, solve_cns
from ..solvers.euler import solve_euler
from ..utils.export import DataExporter
from .config import SweepPoint, ValidatedStudy, largest_grid
from .rates import RATE_COLUMNS, RateReport, RateRow, summarize
from .scenarios import ScenarioFactory

logger = logging.getLogger(__name__)

CERTIFICATE_SAMPLES = 200


@dataclass
class PointResult:
    """Outcome of one sweep point; failed points keep their error"""

    eps: float
    nu: float
    R: float
    status: str = "ok"
    sup_vel_gap: float = math.nan
    sup_dens_gap: float = math.nan
    rei_pass: bool = False
    velocity_offset: float = 0.0
    density_offset: float = 0.0
    checks: dict = field(default_factory=dict)
    cfl: float | None = None
    attempts: int = 0
    directory: str | None = None
    error: str | None = None
    error_type: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return asdict(self)


def point_directory(out_dir, eps: float) -> Path:
    return Path(out_dir) / f"eps_{eps:.6g}"


def _solve_cns_with_retry(rho0, u0, law, params, config):
    """Compressible solve, halving the CFL number after a CFL or density breach"""
    retrying = Retrying(
        stop=stop_after_attempt(settings.MAX_RETRIES),
        retry=retry_if_exception_type((CFLError, DensityError)),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        reraise=True,
    )
    for attempt in retrying:
        with attempt:
            number = attempt.retry_state.attempt_number
            cfl = config.cfl / 2 ** (number - 1)
            trajectory = solve_cns(
                rho0, u0, law, params, config.emit_dt, cfl=cfl, integrator=config.integrator
            )
    return trajectory, cfl, number


def _density_constant(law, comparison):
    """C of the L2 density control over the range of r in the comparison run, and its certificate"""
    lo = min(float(c.r.values.min()) for c in comparison)
    hi = max(float(c.r.values.max()) for c in comparison)
    alpha0 = min(lo, law.rho_bar - hi, 0.49 * law.rho_bar)
    certificate = pointwise_bounds_certificate(law, alpha0, samples=CERTIFICATE_SAMPLES)
    return l2_density_control_constant(law, alpha0, certificate), certificate


def run_point(study: ValidatedStudy, point: SweepPoint, euler=None, out_dir=None) -> PointResult:
    """
    Run one Mach number: acoustics, comparison fields, compressible run and every diagnostic

    Errors are recorded in the result instead of raised so one point never
    alters another.
    """
    config = study.config
    result = PointResult(eps=point.eps, nu=point.nu, R=point.extent)
    directory = point_directory(out_dir or config.output_dir, point.eps)
    try:
        law = config.build_law()
        scenario = ScenarioFactory.create(config.scenario, config)
        params = point.params(config)
        grid = point.grid(config.dim)
        periodic = grid.with_boundary(Boundary.PERIODIC)
        eps = point.eps

        data = scenario.initial_data(periodic)
        acoustic = solve_acoustic(
            data.rho1,
            data.grad_psi0,
            AcousticParams.from_law(law, eps, config.varrho),
            config.T,
            config.emit_dt,
        )
        comparison = comparison_trajectory(grid, acoustic, euler, law, config.shell_cells * grid.h)

        drho, du = scenario.offsets(periodic, eps)
        rho0 = crop_scalar(data.rho1 + drho, grid) * eps + config.varrho
        du = crop_vector(du, grid)
        u0 = comparison[0].v + comparison[0].grad_psi + du
        result.velocity_offset = du.norm(2) ** 2
        result.density_offset = crop_scalar(drho, grid).norm(2) ** 2

        trajectory, result.cfl, result.attempts = _solve_cns_with_retry(rho0, u0, law, params, config)

        gaps = np.array([limit_distance(s, c, eps) for s, c in zip(trajectory, comparison)])
        result.sup_vel_gap = float(gaps[:, 0].max())
        result.sup_dens_gap = float(gaps[:, 1].max())

        constant, certificate = _density_constant(law, comparison)
        b = None
        if config.renorm is not None:
            alpha1 = config.renorm.alpha1 or certificate.alpha1
            m_div = sup_divergence_bound([div(c.w_R + c.grad_psi).values for c in comparison])
            b = renorm_b(law, alpha1, m_div)
        tol = config.tolerances
        rei = rei_check(
            trajectory,
            comparison,
            law,
            params,
            b,
            tol=tol.rei,
            abs_tol=tol.rei_abs,
            density_constant=constant,
            pair_tol=tol.pairs,
        )
        result.rei_pass = rei.passed
        pressure = mean_pressure_estimate(trajectory, law, params, config.eps0)

        E0 = float(rei.E[0])
        bound0 = initial_entropy_bound(
            law,
            params,
            config.eps0,
            result.velocity_offset,
            comparison[0].w_R.norm(2) ** 2,
            result.density_offset,
        )
        gamma = gronwall_gamma(params, E0, config.alpha)
        delta, delta_integral = gronwall_delta(trajectory, law, params)
        result.checks = {
            "initial_entropy_bound": E0 <= bound0 * (1.0 + 1e-9) + tol.rei_abs,
            "mean_pressure_bound": pressure.passed,
            "density_control": all(d["passed"] for d in rei.density_control),
            "cancellation_pairs": all(p["passed"] for p in rei.pairs.values()),
        }

        frame = pd.DataFrame(
            {
                "t": [s.t for s in trajectory],
                "velocity_gap": gaps[:, 0],
                "density_gap": gaps[:, 1],
                "gronwall_bound": gronwall_bound(gamma, delta_integral),
            }
        )
        DataExporter.export_to_csv(ledger_frame(trajectory), directory / "ledger.csv")
        DataExporter.export_to_csv(rei.to_frame(), directory / "relent.csv")
        DataExporter.export_to_csv(frame, directory / "gaps.csv")
        DataExporter.export_to_csv(corrector_norms(comparison), directory / "corrector.csv")
        snapshots = directory / "snapshots"
        for state in (trajectory[0], trajectory[-1]):
            tag = f"t_{state.t:.6g}"
            DataExporter.export_field(state.rho, snapshots / f"rho_{tag}", t=state.t, quantity="density")
            DataExporter.export_field(state.u, snapshots / f"u_{tag}", t=state.t, quantity="velocity")
        DataExporter.export_to_json(
            {
                "point": point.to_dict(),
                "params": params.to_dict(),
                "result": result.to_dict(),
                "relative_entropy": rei.to_dict(),
                "mean_pressure": pressure.to_dict(),
                "initial_entropy": {"E0": E0, "bound": bound0},
                "gronwall": {"gamma": gamma, "delta_final": float(delta[-1])},
                "renormalization": b.to_dict() if b is not None else None,
                "certificate": certificate.to_dict(),
                "density_constant": constant,
            },
            directory / "point.json",
        )
        result.directory = str(directory)
        logger.info(
            f"Point eps={eps:g}: gaps ({result.sup_vel_gap:.3e}, {result.sup_dens_gap:.3e}), "
            f"rei_pass={result.rei_pass}"
        )
    except Exception as e:
        logger.warning(f"Sweep point eps={point.eps:g} failed: {type(e).__name__}: {e}")
        result.status = "failed"
        result.error = str(e)
        result.error_type = type(e).__name__
    return result


def shared_euler(study: ValidatedStudy):
    """The eps-independent Euler trajectory on the largest periodic box, or None"""
    config = study.config
    scenario = ScenarioFactory.create(config.scenario, config)
    v0 = scenario.vortex(largest_grid(config))
    if v0 is None:
        return None
    return solve_euler(v0, config.T, config.emit_dt)


def _rate_rows(study: ValidatedStudy, results: list[PointResult]) -> tuple[list[RateRow], dict]:
    """Calibrate the rate constants on the smallest eps and evaluate the bound everywhere"""
    config = study.config
    law = config.build_law()
    done = [r for r in results if r.ok]
    extra = {}
    constants = RateConstants()
    if done:
        ref = min(done, key=lambda r: r.eps)
        point = next(p for p in study.points if p.eps == ref.eps)
        try:
            constants = calibrate_constants(
                max(ref.sup_vel_gap, ref.sup_dens_gap),
                point.params(config),
                law.rho_bar,
                config.eps0,
                study.eps1,
                ref.velocity_offset,
                ref.density_offset,
                config.alpha,
            )
        except ParameterError as e:
            logger.warning(f"Rate constants not calibrated: {e}")
    rows = []
    for r in done:
        point = next(p for p in study.points if p.eps == r.eps)
        try:
            rhs = rate_bound_rhs(
                point.params(config),
                law.rho_bar,
                config.eps0,
                study.eps1,
                r.velocity_offset,
                r.density_offset,
                config.alpha,
                constants,
            )
        except ParameterError as e:
            logger.warning(f"No rate bound at eps={r.eps:g}: {e}")
            rhs = math.nan
        rows.append(RateRow(r.eps, r.nu, r.R, r.sup_vel_gap, r.sup_dens_gap, rhs, r.rei_pass))
    extra["rate_bound_covers_gaps"] = all(
        max(row.sup_vel_gap, row.sup_dens_gap) <= row.rhs_bound for row in rows if math.isfinite(row.rhs_bound)
    )
    for name in ("initial_entropy_bound", "mean_pressure_bound", "density_control", "cancellation_pairs"):
        extra[name] = all(r.checks.get(name, False) for r in done)
    extra["constants"] = constants
    return rows, extra


def run_study(study: ValidatedStudy, out_dir=None, workers: int | None = None) -> RateReport:
    """
    Run every sweep point and persist the study under the output directory

    The Euler trajectory is solved once and shared. Points run in a process
    pool when more than one worker is configured; the report is assembled
    only after every point has settled.

    Args:
        study: Validated study
        out_dir: Output directory (default: config.output_dir)
        workers: Worker count (default: LAB_WORKERS)

    Returns:
        RateReport
    """
    config = study.config
    out_dir = Path(out_dir or config.output_dir)
    workers = workers or settings.WORKERS
    euler = shared_euler(study)
    logger.info(f"Running study {config.scenario} with {len(study.points)} points on {workers} workers")

    if workers > 1 and len(study.points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_point, study, p, euler, out_dir) for p in study.points]
            results = [f.result() for f in futures]
    else:
        results = [run_point(study, p, euler, out_dir) for p in study.points]

    rows, extra = _rate_rows(study, results)
    constants = extra.pop("constants")
    failed = [r.to_dict() for r in results if not r.ok]
    report = summarize(rows, failed, extra)
    report.notes.append(f"rate constants {constants.to_dict()}")
    emit_outputs(report, out_dir, study, [Path(r.directory).name for r in results if r.directory])
    return report


def emit_outputs(report: RateReport, out_dir, study: ValidatedStudy | None = None, point_dirs=None) -> dict:
    """
    Write config.json (with a study), rates.csv, report.json and plot.gp

    Returns:
        Mapping of file name to its export status
    """
    out_dir = Path(out_dir)
    outputs = {}
    if study is not None:
        outputs["config.json"] = DataExporter.export_to_json(
            {"config": study.config.model_dump(mode="json"), "config_hash": study.config.digest()},
            out_dir / "config.json",
        )
    outputs["rates.csv"] = DataExporter.export_to_csv(report.to_frame(), out_dir / "rates.csv", columns=RATE_COLUMNS)
    payload = {"report": report.to_dict()}
    if study is not None:
        payload["study"] = study.to_dict()
        payload["config_hash"] = study.config.digest()
        payload["tolerances"] = study.config.tolerances.model_dump()
    outputs["report.json"] = DataExporter.export_to_json(payload, out_dir / "report.json")
    outputs["plot.gp"] = DataExporter.write_plot_script(out_dir, list(point_dirs or []))
    failures = {k: v for k, v in outputs.items() if v.get("status") != "success"}
    if failures:
        raise OSError(f"Could not write study outputs: {failures}")
    return outputs


def load_rates(path) -> list[RateRow]:
    """Rows of a rates.csv written by emit_outputs"""
    frame = pd.read_csv(path)
    missing = [c for c in RATE_COLUMNS if c not in frame.columns]
    if missing:
        raise FitError(f"{path} lacks the columns {missing}")
    return [
        RateRow(
            eps=float(r.eps),
            nu=float(r.nu),
            R=float(r.R),
            sup_vel_gap=float(r.sup_vel_gap),
            sup_dens_gap=float(r.sup_dens_gap),
            rhs_bound=float(r.rhs_bound),
            rei_pass=bool(r.rei_pass),
        )
        for r in frame.itertuples(index=False)
    ]
