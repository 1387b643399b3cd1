import json

from fastmcp import Client
import pytest

from src.app import mcp
from src.study.scenarios import ScenarioFactory

UNIT_POWER = {"variant": "power", "a": 1.0, "gamma": 2.0, "beta": 3.0, "rho_bar": 1.0}


def _equilibrium(**overrides) -> dict:
    return {**ScenarioFactory.get_scenario_info("equilibrium")["default_config"], **overrides}


async def _call(tool: str, arguments: dict | None = None) -> dict:
    async with Client(mcp) as client:
        result = await client.call_tool(tool, arguments or {})
        return json.loads(result.content[0].text)


async def test_tools_are_registered():
    async with Client(mcp) as client:
        names = {tool.name for tool in await client.list_tools()}
    assert {
        "list_pressure_laws",
        "evaluate_law",
        "potential_certificate",
        "run_self_checks",
        "list_scenarios",
        "validate_study",
        "run_convergence_study",
        "fit_rates",
        "read_report",
    } <= names


async def test_list_pressure_laws():
    payload = await _call("list_pressure_laws")
    assert payload["count"] == 2
    assert {law["variant"] for law in payload["laws"]} == {"power", "cs"}


async def test_evaluate_law():
    payload = await _call("evaluate_law", {"law": UNIT_POWER, "densities": [0.5]})
    assert payload["pressure"] == [pytest.approx(2.0)]
    assert payload["pressure_derivative"] == [pytest.approx(20.0)]
    assert payload["potential"] == [pytest.approx(0.0, abs=1e-9)]


async def test_evaluate_law_outside_the_domain():
    payload = await _call("evaluate_law", {"law": UNIT_POWER, "densities": [1.5]})
    assert payload["error"] == "Invalid input"
    assert payload["error_type"] == "DomainError"


async def test_unknown_self_check():
    payload = await _call("run_self_checks", {"check": "nope"})
    assert payload["error_type"] == "ParameterError"
    assert "eos-identities" in payload["available"]


async def test_validate_study_reports_violations():
    config = _equilibrium(T=5.0)
    payload = await _call("validate_study", {"config": config})
    assert payload["valid"] is False
    assert "radius condition" in payload["message"]


async def test_validate_study_accepts_the_defaults():
    payload = await _call("validate_study", {"config": _equilibrium()})
    assert payload["valid"] is True
    assert len(payload["points"]) == 3


async def test_fit_rates_without_a_study(tmp_path):
    payload = await _call("fit_rates", {"out_dir": str(tmp_path)})
    assert payload["error"] == "Fit failed"


async def test_read_report_without_a_study(tmp_path):
    payload = await _call("read_report", {"out_dir": str(tmp_path)})
    assert payload["error"] == "Report not readable"


async def test_resources():
    async with Client(mcp) as client:
        laws = json.loads((await client.read_resource("laws://list"))[0].text)
        scenario = json.loads((await client.read_resource("scenarios://equilibrium"))[0].text)
    assert laws["count"] == 2
    assert scenario["name"] == "equilibrium"
    assert scenario["default_config"]["cells"] == 256
