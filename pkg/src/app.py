"""
Hardsphere Lab Server
A Model Context Protocol server built with FastMCP 2.0
Exposes pressure laws, certificates, self-checks and convergence studies as tools
"""

import json
from pathlib import Path

from fastmcp import FastMCP
import numpy as np
from starlette.middleware import Middleware
from starlette.middleware.cors import CORSMiddleware
from starlette.responses import JSONResponse

from .core.errors import LabError
from .core.law_factory import LawFactory
from .eos.lemmas import l2_density_control_constant, pointwise_bounds_certificate, verify_certificate
from .study.checks import list_checks, run_checks
from .study.config import load_config, validate_config
from .study.rates import summarize
from .study.runner import load_rates, run_study
from .study.scenarios import ScenarioFactory

mcp = FastMCP(
    name="HardsphereLab",
    instructions=(
        "A numerical laboratory for the low Mach number limit of compressible viscous flow "
        "with a hard-sphere pressure law. Provides tools to evaluate pressure laws and their "
        "potentials, certify the convexity bounds of the pressure potential, run the module "
        "self-checks, validate and run convergence studies, and read back fitted rates."
    ),
)

# Configure CORS for browser-based clients
middleware = [
    Middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET"],
        allow_headers=[
            "mcp-protocol-version",
            "mcp-session-id",
            "Authorization",
            "Content-Type",
        ],
        expose_headers=["mcp-session-id"],
    )
]


def _error(label: str, e: Exception, **context) -> dict:
    return {"error": label, "error_type": type(e).__name__, "message": str(e), **context}


# ============================================================================
# PRESSURE LAW TOOLS
# ============================================================================

def _laws() -> dict:
    try:
        laws = [LawFactory.get_law_info(v) for v in LawFactory.list_laws()]
        return {"count": len(laws), "laws": laws}
    except Exception as e:
        return _error("Failed to list laws", e)


def _scenarios() -> dict:
    try:
        scenarios = [ScenarioFactory.get_scenario_info(n) for n in ScenarioFactory.list_scenarios()]
        return {"count": len(scenarios), "scenarios": scenarios}
    except Exception as e:
        return _error("Failed to list scenarios", e)


@mcp.tool
def list_pressure_laws() -> dict:
    """
    List the registered pressure-law variants and their parameters.

    Example:
        list_pressure_laws()
        Returns: {
            "count": 2,
            "laws": [{"variant": "power", "parameters": ["a", "gamma", "beta", "rho_bar"], ...}, ...]
        }
    """
    return _laws()


@mcp.tool
def evaluate_law(law: dict, densities: list[float]) -> dict:
    """
    Evaluate p, p', P, P' and P'' of a pressure law at the given densities.

    Args:
        law: Law specification, e.g. {"variant": "power", "a": 0.45, "gamma": 2, "beta": 3, "rho_bar": 3}
        densities: Densities in [0, rho_bar)

    Returns:
        Dictionary with one list per quantity, aligned with densities
    """
    try:
        instance = LawFactory.create(law)
        s = np.asarray(densities, dtype=float)
        dp, d2p = instance.pressure_derivatives(s)
        dP, d2P = instance.potential_derivatives(s)
        return {
            "law": instance.to_spec(),
            "densities": s.tolist(),
            "pressure": np.atleast_1d(instance.pressure(s)).tolist(),
            "pressure_derivative": np.atleast_1d(dp).tolist(),
            "pressure_second_derivative": np.atleast_1d(d2p).tolist(),
            "potential": np.atleast_1d(instance.potential(s)).tolist(),
            "potential_derivative": np.atleast_1d(dP).tolist(),
            "potential_second_derivative": np.atleast_1d(d2P).tolist(),
        }
    except ValueError as e:
        return _error("Invalid input", e, law=law)
    except Exception as e:
        return _error("Unexpected error", e, law=law)


@mcp.tool
def potential_certificate(law: dict, alpha0: float, samples: int = 200) -> dict:
    """
    Certify the three-branch bounds of the Bregman gap of the pressure potential.

    Args:
        law: Law specification
        alpha0: Margin of the reference densities, 0 < alpha0 < rho_bar/2
        samples: Sample count per axis of the fitting grid (default: 200)

    Returns:
        Certificate (alpha1, c_low, c_up), its re-verification on a twice denser
        grid and the L2 density-control constant
    """
    try:
        instance = LawFactory.create(law)
        certificate = pointwise_bounds_certificate(instance, alpha0, samples=samples)
        return {
            "certificate": certificate.to_dict(),
            "verification_failures": verify_certificate(instance, certificate, 2 * samples),
            "density_control_constant": l2_density_control_constant(instance, alpha0, certificate),
        }
    except ValueError as e:
        return _error("Invalid input", e, law=law, alpha0=alpha0)
    except LabError as e:
        return _error("Certificate search failed", e, law=law, alpha0=alpha0)
    except Exception as e:
        return _error("Unexpected error", e, law=law, alpha0=alpha0)


# ============================================================================
# SELF-CHECK TOOLS
# ============================================================================

@mcp.tool
def run_self_checks(check: str | None = None) -> dict:
    """
    Run one module self-check, or all of them when check is omitted.

    Args:
        check: One of eos-identities, eos-certificate, acoustic-conservation,
            acoustic-decay, euler-suite, bogovskii-suite, cns-diagnostics

    Returns:
        Dictionary with one report per check and the overall pass flag
    """
    try:
        results = run_checks(check)
        return {"checks": results, "passed": all(r["passed"] for r in results.values())}
    except ValueError as e:
        return _error("Invalid input", e, available=list_checks())
    except Exception as e:
        return _error("Unexpected error", e)


# ============================================================================
# STUDY TOOLS
# ============================================================================

@mcp.tool
def list_scenarios() -> dict:
    """List the registered scenarios with their default configurations."""
    return _scenarios()


@mcp.tool
def validate_study(config: dict, seed: int | None = None, cells: int | None = None) -> dict:
    """
    Check every admissibility inequality of a study configuration.

    Args:
        config: Study configuration (the JSON schema of configs/*.json)
        seed: Optional seed override
        cells: Optional resolution override

    Returns:
        Normalized configuration, sweep points, eps1 and the check table
    """
    try:
        study = validate_config(load_config(config, seed=seed, cells=cells))
        return {"valid": True, **study.to_dict()}
    except ValueError as e:
        return {"valid": False, **_error("Invalid configuration", e)}
    except Exception as e:
        return _error("Unexpected error", e)


@mcp.tool
def run_convergence_study(config: dict, out_dir: str | None = None, seed: int | None = None) -> dict:
    """
    Validate and run a convergence study, writing its outputs to disk.

    Args:
        config: Study configuration
        out_dir: Output directory (default: the config's output_dir)
        seed: Optional seed override

    Returns:
        Rate report with rows, fitted slopes, pass flags and the output directory
    """
    try:
        study = validate_config(load_config(config, seed=seed))
        directory = out_dir or study.config.output_dir
        report = run_study(study, out_dir=directory)
        return {"out_dir": str(Path(directory).absolute()), **report.to_dict()}
    except ValueError as e:
        return _error("Invalid configuration", e)
    except (LabError, OSError) as e:
        return _error("Study failed", e)
    except Exception as e:
        return _error("Unexpected error", e)


@mcp.tool
def fit_rates(out_dir: str) -> dict:
    """
    Refit the log-log gap slopes of a finished study from its rates.csv.

    Args:
        out_dir: Study output directory
    """
    try:
        return summarize(load_rates(Path(out_dir) / "rates.csv")).to_dict()
    except (LabError, OSError) as e:
        return _error("Fit failed", e, out_dir=out_dir)
    except Exception as e:
        return _error("Unexpected error", e, out_dir=out_dir)


@mcp.tool
def read_report(out_dir: str) -> dict:
    """
    Read report.json of a finished study.

    Args:
        out_dir: Study output directory
    """
    try:
        return json.loads((Path(out_dir) / "report.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        return _error("Report not readable", e, out_dir=out_dir)


# ============================================================================
# RESOURCES
# ============================================================================

@mcp.resource("laws://list")
def get_laws_resource() -> str:
    """MCP Resource: registered pressure-law variants"""
    return json.dumps(_laws(), indent=2)


@mcp.resource("scenarios://list")
def get_scenarios_resource() -> str:
    """MCP Resource: registered scenarios and their default configurations"""
    return json.dumps(_scenarios(), indent=2)


@mcp.resource("scenarios://{name}")
def get_scenario_resource(name: str) -> str:
    """
    MCP Resource: one scenario

    Args:
        name: Scenario name
    """
    try:
        return json.dumps(ScenarioFactory.get_scenario_info(name), indent=2)
    except ValueError as e:
        return json.dumps(_error("Invalid input", e, name=name), indent=2)


@mcp.custom_route("/health", methods=["GET"])
async def health_check(request):
    return JSONResponse({"status": "healthy", "service": "hardsphere-lab"})


app = mcp.http_app(middleware=middleware)
