import json
from pathlib import Path

from src.cli import EXIT_FAILED, EXIT_INPUT, EXIT_OK, main
from src.study.rates import RateRow, summarize
from src.study.runner import emit_outputs

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write_study(directory):
    rows = [
        RateRow(eps, eps ** (2 / 3), 0.5 * eps**-1.5, eps**2, eps, 10 * eps, True)
        for eps in (0.2, 0.1, 0.05)
    ]
    emit_outputs(summarize(rows), directory)


def test_validate_prints_the_study(capsys):
    assert main(["validate", "--config", str(CONFIGS / "equilibrium.json")]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert [p["eps"] for p in payload["points"]] == [0.2, 0.1, 0.05]
    assert len(payload["config_hash"]) == 64


def test_validate_applies_overrides(capsys):
    argv = ["validate", "--config", str(CONFIGS / "equilibrium.json"), "--seed", "3", "--resolution-override", "128"]
    assert main(argv) == EXIT_OK
    config = json.loads(capsys.readouterr().out)["config"]
    assert config["seed"] == 3 and config["cells"] == 128


def test_validate_needs_a_config():
    assert main(["validate"]) == EXIT_INPUT


def test_invalid_config_is_an_input_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"scenario": "equilibrium"}))
    assert main(["validate", "--config", str(path)]) == EXIT_INPUT


def test_unknown_self_check_fails():
    assert main(["run", "--only", "nope"]) == EXIT_FAILED


def test_single_self_check(capsys):
    assert main(["run", "--only", "eos-identities"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["eos-identities"]["passed"]


def test_fit_refits_written_rates(tmp_path, capsys):
    _write_study(tmp_path)
    assert main(["fit", "--out", str(tmp_path)]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["velocity_fit"]["slope"] > 1.9


def test_fit_without_rates_is_an_input_error(tmp_path):
    (tmp_path / "rates.csv").write_text("eps\n0.1\n")
    assert main(["fit", "--out", str(tmp_path)]) == EXIT_INPUT


def test_report_prints_every_flag(tmp_path, capsys):
    _write_study(tmp_path)
    assert main(["report", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "eps=0.2" in out
    assert "all_points_completed: pass" in out


def test_report_without_a_study_is_an_input_error(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == EXIT_INPUT
