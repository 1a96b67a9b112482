"""
Subcommand registry.

Each subcommand is a function taking a RunConfig and returning a CommandResult,
registered with `@command(...)` the way tools are registered on a server.
"""
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import pandas as pd

from energy_cli.reports import RunConfig

Argument = Tuple[Tuple[str, ...], Dict[str, Any]]


@dataclass
class CommandResult:
    result: Dict[str, Any]
    frame: Optional[pd.DataFrame] = None
    passed: bool = True


@dataclass
class Command:
    name: str
    handler: Callable[[RunConfig], CommandResult]
    help: str
    arguments: List[Argument] = field(default_factory=list)

    @property
    def option_names(self) -> List[str]:
        return [kwargs.get("dest") or flags[0].lstrip("-").replace("-", "_") for flags, kwargs in self.arguments]


COMMANDS: Dict[str, Command] = {}


def argument(*flags: str, **kwargs: Any) -> Argument:
    return flags, kwargs


def command(name: str, help: str, *arguments: Argument):
    """Register the decorated function as subcommand `name`."""

    def decorator(fn: Callable[[RunConfig], CommandResult]) -> Callable[[RunConfig], CommandResult]:
        if name in COMMANDS:
            raise ValueError(f"Subcommand {name!r} registered twice")
        COMMANDS[name] = Command(name=name, handler=fn, help=help, arguments=list(arguments))
        return fn

    return decorator
