"""Energy commands."""
import pandas as pd

from energy_cli.commands.registry import CommandResult, argument, command
from energy_cli.map_parser import parse_map
from energy_cli.reports import RunConfig
from conformal_energy.energy import complex_kernel_imaginary_part, conformal_energy, energy_oracle, energy_series
from conformal_energy.errors import ParameterDomainError


@command("energy", "Conformal energy with a grid-halving error estimate",
         argument("--series", action="store_true", default=None,
                  help="also report the observed convergence order over all levels"))
def energy_command(config: RunConfig) -> CommandResult:
    """
    Evaluate E(map) at the configured n and report every level used.

    Args:
        config: run configuration

    Returns:
        CommandResult whose table has one row per grid level
    """
    angle_map = parse_map(config.map)
    estimate = conformal_energy(angle_map, config.quadrature())
    result = {
        "map": angle_map.describe(),
        "estimate": estimate.to_dict(),
        "levels": [{"n": n, "value": value} for n, value in estimate.levels],
    }
    if config.option("series", False):
        ns = [n for n, _ in estimate.levels]
        series = energy_series(angle_map, ns, config.scheme)
        result["observed_order"] = series["observed_order"]
        result["imaginary_part"] = complex_kernel_imaginary_part(angle_map, config.n)
    frame = pd.DataFrame(estimate.levels, columns=["n", "value"])
    return CommandResult(result, frame)


@command("oracle", "Energy from the plain midpoint rule without kernel subtraction")
def oracle_command(config: RunConfig) -> CommandResult:
    """The error is the change from n/2, so n must leave the coarse level at 64 or more."""
    if config.n < 128:
        raise ParameterDomainError(f"oracle needs --n >= 128 for its n/2 error level, got {config.n}", {"n": config.n})
    angle_map = parse_map(config.map)
    value = energy_oracle(angle_map, config.n)
    coarse = energy_oracle(angle_map, config.n // 2)
    result = {"map": angle_map.describe(), "value": value, "err": abs(value - coarse), "n": config.n}
    return CommandResult(result)
