"""Quasi-Möbius bound and cross-ratio distortion commands."""
from energy_cli.commands.registry import CommandResult, argument, command
from energy_cli.map_parser import parse_gauge, parse_map
from energy_cli.reports import RunConfig
from conformal_energy.moebius_bounds import bound_vs_energy, cr_distortion_scan, qm_energy_bound


@command("bound", "Energy bound of an η-quasi-Möbius map",
         argument("--eta", help="gauge: identity, linear:alpha=<x> or table:<csv> (default identity)"),
         argument("--order", type=int, help="Gauss order per panel (default 16)"))
def bound_command(config: RunConfig) -> CommandResult:
    gauge = parse_gauge(config.option("eta", "identity"))
    value = qm_energy_bound(gauge, config.option("order", 16))
    return CommandResult({"eta": gauge.describe(), "extrapolation": gauge.extrapolation, "bound": value})


@command("scan", "Empirical cross-ratio distortion envelope of a map",
         argument("--quadruples", type=int, help="random quadruples (default 20000)"),
         argument("--compare", action="store_true", default=None,
                  help="compare E(map) with the bounds of the fitted gauges"))
def scan_command(config: RunConfig) -> CommandResult:
    """
    Sample cross ratios of the map and tabulate η̂(t).

    Args:
        config: run configuration; `seed` drives the sampler

    Returns:
        CommandResult with the envelope table (t, eta_hat, support_count)
    """
    angle_map = parse_map(config.map)
    scan = cr_distortion_scan(angle_map, config.option("quadruples", 20000), config.seed)
    result = {"map": angle_map.describe(), "envelope": scan.summary()}
    if config.option("compare", False):
        result["comparison"] = bound_vs_energy(angle_map, config.quadrature(), scan).to_dict()
    return CommandResult(result, scan.to_frame())
