"""Configuration settings for the conformal energy toolkit"""
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        from conformal_energy.errors import ConfigurationError

        raise ConfigurationError(f"Environment variable {name}={raw!r} is not an integer")


# Logging configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE", "/tmp/conformal_energy.log")

# Parallel quadrature; results never depend on the worker count
WORKERS = max(1, _int_env("CONFORMAL_WORKERS", 1))
TILE_ROWS = max(8, _int_env("CONFORMAL_TILE_ROWS", 128))

# Numerical defaults recorded into every report
DEFAULT_N = _int_env("CONFORMAL_DEFAULT_N", 1024)
DEFAULT_REFINE = _int_env("CONFORMAL_DEFAULT_REFINE", 1)
DEFAULT_TRUNCATION_M = _int_env("CONFORMAL_DEFAULT_M", 512)
DEFAULT_SAMPLING_FACTOR = _int_env("CONFORMAL_SAMPLING_FACTOR", 16)
DEFAULT_GRID_ANGULAR = _int_env("CONFORMAL_GRID_ANGULAR", 512)
DEFAULT_SEED = _int_env("CONFORMAL_SEED", 0)
