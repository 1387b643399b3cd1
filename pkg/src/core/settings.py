"""
Runtime Settings
Environment-driven defaults for output, workers and numerics
"""

import os

from dotenv import load_dotenv

load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"Environment variable {name} must be an integer, got '{raw}'")


OUTPUT_DIR = os.getenv("LAB_OUTPUT_DIR", "runs")
WORKERS = max(1, _int_env("LAB_WORKERS", 1))
LOG_LEVEL = os.getenv("LAB_LOG_LEVEL", "INFO").upper()
SPLINE_NODES = max(64, _int_env("LAB_SPLINE_NODES", 2048))
MAX_RETRIES = max(1, _int_env("LAB_MAX_RETRIES", 3))
