import json
from pathlib import Path

import pandas as pd
import pytest

from src.core.errors import ConfigError, FitError
from src.fields.grid import Boundary
from src.study.config import largest_grid, load_config, sweep_points, validate_config
from src.study.rates import RATE_COLUMNS, RateReport, RateRow, fit_rate, summarize
from src.study.runner import emit_outputs, load_rates, run_study
from src.study.scenarios import ScenarioFactory

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _defaults(name="equilibrium", **overrides):
    data = ScenarioFactory.get_scenario_info(name)["default_config"]
    return {**data, **overrides}


def _rows(vel=(4e-2, 1e-2, 2.5e-3), dens=(1e-2, 5e-3, 2.5e-3)):
    eps = (0.2, 0.1, 0.05)
    return [RateRow(e, e ** (2 / 3), 0.5 * e**-1.5, v, d, 10 * v, True) for e, v, d in zip(eps, vel, dens)]


# ============================================================================
# CONFIGURATION
# ============================================================================

@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    config = load_config(path)
    assert config.scenario in ScenarioFactory.list_scenarios()


@pytest.mark.parametrize("name", ScenarioFactory.list_scenarios())
def test_scenario_defaults_parse(name):
    config = load_config(_defaults(name))
    ScenarioFactory.create(name, config)


def test_config_rejects_odd_cells():
    with pytest.raises(ConfigError, match="even"):
        load_config(_defaults(cells=255))


def test_config_rejects_non_descending_eps():
    with pytest.raises(ConfigError, match="descending"):
        load_config(_defaults(eps=[0.1, 0.2]))


def test_config_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        load_config(_defaults(mach=0.1))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="Cannot read"):
        load_config(tmp_path / "absent.json")


def test_overrides_replace_top_level_fields():
    config = load_config(_defaults(), seed=7, cells=128, output_dir=None)
    assert config.seed == 7 and config.cells == 128


def test_digest_is_deterministic():
    a, b = load_config(_defaults()), load_config(_defaults())
    assert a.digest() == b.digest()
    assert load_config(_defaults(seed=1)).digest() != a.digest()


def test_unknown_scenario():
    with pytest.raises(ConfigError, match="not found"):
        ScenarioFactory.create("vortex-street", load_config(_defaults()))


def test_taylor_green_scenario_needs_its_vortex():
    config = load_config(_defaults("taylor-green-coupled-2d", data={"density_amplitude": 0.5}))
    with pytest.raises(ConfigError):
        ScenarioFactory.create("taylor-green-coupled-2d", config)


def test_near_barrier_scenario_needs_renormalization():
    data = _defaults("near-barrier-bump")
    data.pop("renorm")
    with pytest.raises(ConfigError, match="renorm"):
        ScenarioFactory.create("near-barrier-bump", load_config(data))


# ============================================================================
# SWEEP GEOMETRY AND VALIDATION
# ============================================================================

def test_sweep_boxes_share_one_spacing():
    config = load_config(_defaults())
    points = sweep_points(config)
    big = largest_grid(config)
    assert [p.eps for p in points] == config.eps
    assert points[-1].cells == config.cells
    for p in points:
        assert p.cells % 2 == 0
        assert 2.0 * p.extent / p.cells == pytest.approx(big.h)
        assert p.nu == pytest.approx(p.eps ** (2.0 / 3.0))


def test_equilibrium_defaults_validate():
    study = validate_config(load_config(_defaults()), sup_s=1.0)
    assert study.eps1 == pytest.approx(1.5)
    assert all(study.checks.values())
    assert study.to_dict()["config_hash"] == study.config.digest()


def test_silent_acoustics_give_an_unbounded_eps1():
    study = validate_config(load_config(_defaults()))
    assert study.to_dict()["eps1"] is None


def test_path_rule_must_make_eps_R_diverge():
    config = load_config(_defaults(path={"R0": 0.5, "R_exponent": 0.5}))
    with pytest.raises(ConfigError, match=r"eps R\(eps\) must diverge"):
        validate_config(config, sup_s=1.0)


def test_radius_condition_is_reported():
    with pytest.raises(ConfigError, match="radius condition"):
        validate_config(load_config(_defaults(T=5.0)), sup_s=1.0)


def test_data_ceiling_is_reported():
    with pytest.raises(ConfigError, match="data ceiling"):
        validate_config(load_config(_defaults(eps0=0.8)), sup_s=1.0)


def test_initial_data_bound_counts_the_l2_norms():
    # sup of the data is 1 <= D, but the L2 norms push the sum above D = 2
    data = {"density_amplitude": 1.0, "potential_amplitude": 0.5}
    config = load_config(_defaults("acoustic-pulse-1d", data=data))
    with pytest.raises(ConfigError, match="initial data bound at eps=0.2"):
        validate_config(config, sup_s=1.0)


def test_initial_data_bound_includes_the_offsets():
    config = load_config(
        _defaults("acoustic-pulse-1d", perturbation={"density": 30.0, "velocity": 0.0, "exponent": 1.0})
    )
    scenario = ScenarioFactory.create(config.scenario, config)
    point = sweep_points(config)[0]
    grid = point.grid(config.dim, Boundary.PERIODIC)
    assert scenario.data_norms(grid, point.eps)["rho_sup"] == pytest.approx(0.5 + 30.0 * point.eps, rel=1e-2)
    with pytest.raises(ConfigError, match="initial data bound at eps=0.2"):
        validate_config(config, sup_s=1.0)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_satisfy_the_initial_data_bound(path):
    study = validate_config(load_config(path), sup_s=0.5)
    bounds = {name: ok for name, ok in study.checks.items() if name.startswith("initial data bound")}
    assert len(bounds) == len(study.points)
    assert all(bounds.values())


def test_eps_above_eps1_is_reported():
    with pytest.raises(ConfigError, match=r"eps=0.2 < min\(eps0, eps1\)"):
        validate_config(load_config(_defaults()), sup_s=10.0)


# ============================================================================
# RATES
# ============================================================================

def test_fit_rate_recovers_the_slope():
    fit = fit_rate([0.2, 0.1, 0.05], [0.2**1.5, 0.1**1.5, 0.05**1.5])
    assert fit.slope == pytest.approx(1.5)
    assert fit.points == 3


@pytest.mark.parametrize("eps, gaps", [([0.2, 0.1], [1.0, 0.5]), ([0.2, 0.1, 0.05], [1.0, 0.0, 0.5])])
def test_fit_rate_rejects_short_or_empty_tables(eps, gaps):
    with pytest.raises(FitError):
        fit_rate(eps, gaps)


def test_summary_flags_a_converging_study():
    report = summarize(list(reversed(_rows())))
    assert [row.eps for row in report.rows] == [0.2, 0.1, 0.05]
    assert report.velocity_fit.slope == pytest.approx(2.0)
    assert report.density_fit.slope == pytest.approx(1.0)
    assert report.passed
    assert report.flags["velocity_slope_positive"]


def test_summary_of_a_failed_point():
    report = summarize(_rows()[:2], failed=[{"eps": 0.05, "error": "DensityError"}])
    assert not report.flags["all_points_completed"]
    assert report.velocity_fit is None
    assert any("not fitted" in note for note in report.notes)
    assert not report.passed


def test_growing_gap_is_flagged():
    report = summarize(_rows(vel=(1e-3, 2e-3, 4e-3)))
    assert not report.flags["velocity_gap_decreasing"]
    assert not report.flags["velocity_slope_positive"]


def test_empty_report_keeps_the_header():
    frame = RateReport().to_frame()
    assert list(frame.columns) == RATE_COLUMNS
    assert frame.empty
    assert not RateReport().passed


def test_rates_round_trip_through_csv(tmp_path):
    report = summarize(_rows())
    outputs = emit_outputs(report, tmp_path)
    assert set(outputs) == {"rates.csv", "report.json", "plot.gp"}
    loaded = RateReport(rows=load_rates(tmp_path / "rates.csv"))
    pd.testing.assert_frame_equal(loaded.to_frame(), report.to_frame())
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["report"]["passed"] is True


def test_rates_need_every_column(tmp_path):
    pd.DataFrame({"eps": [0.1]}).to_csv(tmp_path / "rates.csv", index=False)
    with pytest.raises(FitError, match="lacks"):
        load_rates(tmp_path / "rates.csv")


# ============================================================================
# STUDY RUN
# ============================================================================

@pytest.mark.slow
def test_equilibrium_study_runs_end_to_end(tmp_path):
    study = validate_config(load_config(_defaults(output_dir=str(tmp_path))))
    report = run_study(study, workers=1)
    assert report.flags["all_points_completed"]
    assert report.flags["rei_pass"]
    assert len(report.rows) == 3
    assert all(row.sup_vel_gap == 0.0 and row.sup_dens_gap == 0.0 for row in report.rows)
    for name in ("config.json", "rates.csv", "report.json", "plot.gp"):
        assert (tmp_path / name).is_file()
    point = tmp_path / "eps_0.05"
    for name in ("ledger.csv", "relent.csv", "gaps.csv", "corrector.csv", "point.json"):
        assert (point / name).is_file()
    assert any((point / "snapshots").glob("rho_*.bin"))
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["config_hash"] == study.config.digest()


@pytest.mark.slow
def test_reference_sweep_converges_at_reduced_resolution(tmp_path):
    config = load_config(CONFIGS / "reference_1d.json", cells=512, output_dir=str(tmp_path))
    report = run_study(validate_config(config), workers=1)
    assert report.flags["all_points_completed"]
    assert [row.eps for row in report.rows] == [0.2, 0.1, 0.05]
    vel = [row.sup_vel_gap for row in report.rows]
    dens = [row.sup_dens_gap for row in report.rows]
    assert all(b < a for a, b in zip(vel, vel[1:]))
    assert all(b < a for a, b in zip(dens, dens[1:]))
    point = json.loads((tmp_path / "eps_0.1" / "point.json").read_text())["result"]
    assert point["sup_vel_gap"] > 0.0 and point["sup_dens_gap"] > 0.0
    assert point["checks"]["cancellation_pairs"]
