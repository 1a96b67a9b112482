"""Map-level commands: diagnostics, Möbius invariance and bilipschitz bounds."""
import pandas as pd

from energy_cli.commands.registry import CommandResult, argument, command
from energy_cli.map_parser import parse_map
from energy_cli.reports import RunConfig
from conformal_energy.circle_maps import validate
from conformal_energy.energy import bilip_bounds_report, conformal_energy, invariance_gap
from conformal_energy.errors import ParameterDomainError


@command("validate", "Monotonicity, closure and Hölder-type diagnostics of a map",
         argument("--samples", type=int, help="grid cells (default 1024)"))
def validate_command(config: RunConfig) -> CommandResult:
    angle_map = parse_map(config.map, check=False)
    diagnostics = validate(angle_map, config.option("samples", 1024), strict=False)
    result = {"map": angle_map.describe(), "diagnostics": diagnostics.to_dict(), "regular": diagnostics.regular}
    return CommandResult(result)


@command("invariance", "|E(φ∘map) − E(map)| for a Möbius φ",
         argument("--phi", help="Möbius expression (default mobius:a=0.5+0i,rot=0)"))
def invariance_command(config: RunConfig) -> CommandResult:
    """
    Energy gap under post-composition with a Möbius map.

    Args:
        config: run configuration; option `phi` holds the Möbius expression

    Returns:
        CommandResult with the gap next to both energy estimates
    """
    angle_map = parse_map(config.map)
    phi = parse_map(config.option("phi", "mobius:a=0.5+0i,rot=0"))
    q = config.quadrature()
    gap = invariance_gap(angle_map, phi, q)
    base = conformal_energy(angle_map, q)
    result = {
        "map": angle_map.describe(),
        "phi": phi.describe(),
        "gap": gap,
        "energy": base.to_dict(),
        "tolerance": base.err + 1e-12,
    }
    return CommandResult(result)


@command("bilip", "Check the bilipschitz energy bounds for f composed with g",
         argument("--g", help="inner map expression (default identity)"),
         argument("--L", dest="L", type=float, help="claimed bilipschitz constant of --map"),
         argument("--certificate-samples", type=int, help="samples for the L certificate (default 1024)"))
def bilip_command(config: RunConfig) -> CommandResult:
    if config.option("L") is None:
        raise ParameterDomainError("bilip needs --L")
    f = parse_map(config.map)
    g = parse_map(config.option("g", "identity"))
    report = bilip_bounds_report(f, g, float(config.option("L")), config.quadrature(),
                                 config.option("certificate_samples", 1024))
    frame = pd.DataFrame({
        "quantity": ["lower_bound", "energy_fg", "upper_bound", "energy_f", "standalone_bound"],
        "value": [report.lower_bound, report.energy_fg.value, report.upper_bound,
                  report.energy_f.value, report.standalone_bound],
    })
    result = {"f": f.describe(), "g": g.describe(), "report": report.to_dict()}
    return CommandResult(result, frame)
