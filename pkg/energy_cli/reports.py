"""
Run configuration and report writers.

Report bodies are deterministic: keys are sorted, floats are written with
repr precision and timings go to a `<output>.timings.json` sidecar and the log.
"""
import json
import logging
import math
import platform
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional

import numpy as np
import pandas as pd
import scipy

from config import settings
from conformal_energy import __version__
from conformal_energy.energy import SCHEMES, SUBTRACTED, QuadratureSpec
from conformal_energy.errors import ConfigurationError

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv")


@dataclass
class RunConfig:
    command: str
    map: str = "identity"
    n: int = settings.DEFAULT_N
    scheme: str = SUBTRACTED
    refine: int = settings.DEFAULT_REFINE
    M: int = settings.DEFAULT_TRUNCATION_M
    sampling_factor: int = settings.DEFAULT_SAMPLING_FACTOR
    seed: int = settings.DEFAULT_SEED
    output: Optional[str] = None
    format: str = "json"
    options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ConfigurationError(f"Unknown output format {self.format!r}; expected one of {FORMATS}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"Unknown scheme {self.scheme!r}; expected one of {SCHEMES}")

    @classmethod
    def from_sources(
        cls,
        command: str,
        option_names: Iterable[str],
        file_values: Optional[Mapping[str, Any]] = None,
        cli_values: Optional[Mapping[str, Any]] = None,
    ) -> "RunConfig":
        """
        Merge a config file with command-line values; command-line values win.

        Args:
            command: subcommand name
            option_names: options the subcommand accepts
            file_values: parsed --config JSON (top-level fields plus "options")
            cli_values: non-None values from argparse

        Returns:
            RunConfig with every default filled in
        """
        allowed = {f.name for f in fields(cls)} - {"command", "options"}
        option_names = set(option_names)
        merged: Dict[str, Any] = {}
        options: Dict[str, Any] = {}

        file_values = dict(file_values or {})
        if file_values.get("command", command) != command:
            raise ConfigurationError(
                f"Config file is for {file_values['command']!r}, not {command!r}",
                {"command": file_values["command"]},
            )
        file_values.pop("command", None)
        file_options = file_values.pop("options", {}) or {}
        unknown = sorted(set(file_values) - allowed) + sorted(set(file_options) - option_names)
        if unknown:
            raise ConfigurationError(f"Unknown config keys: {', '.join(unknown)}", {"unknown": unknown})
        merged.update(file_values)
        options.update(file_options)

        for key, value in (cli_values or {}).items():
            if value is None:
                continue
            if key in allowed:
                merged[key] = value
            elif key in option_names:
                options[key] = value
        return cls(command=command, options=options, **merged)

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(n=self.n, scheme=self.scheme, refine=self.refine)

    def option(self, name: str, default: Any = None) -> Any:
        value = self.options.get(name)
        return default if value is None else value

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"Cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a JSON object")
    return data


def versions() -> Dict[str, str]:
    return {
        "conformal_energy": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return {"re": jsonable(value.real), "im": jsonable(value.imag)}
    if isinstance(value, Path):
        return str(value)
    return value


def build_report(config: RunConfig, result: Mapping[str, Any], success: bool = True) -> Dict[str, Any]:
    return {
        "success": success,
        "command": config.command,
        "config": config.to_dict(),
        "versions": versions(),
        "result": dict(result),
    }


def dumps(report: Mapping[str, Any]) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _emit(text: str, output: Optional[str]) -> None:
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def write_report(config: RunConfig, report: Mapping[str, Any], frame: Optional[pd.DataFrame] = None) -> None:
    """
    Write the report in the configured format.

    CSV output writes the command's table; the full JSON report goes next to it
    as `<output>.json` so the config stays attached to the numbers.
    """
    if config.format == "json" or frame is None:
        if config.format == "csv":
            logger.warning("%s has no tabular output; writing JSON", config.command)
        _emit(dumps(report), config.output)
        return
    text = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    _emit(text, config.output)
    if config.output is not None:
        _emit(dumps(report), f"{config.output}.json")


def write_timings(config: RunConfig, timings: Mapping[str, float]) -> None:
    logger.info("Timings for %s: %s", config.command, ", ".join(f"{k}={v:.3f}s" for k, v in timings.items()))
    if config.output is not None:
        _emit(json.dumps(jsonable(dict(timings)), sort_keys=True, indent=2) + "\n", f"{config.output}.timings.json")
