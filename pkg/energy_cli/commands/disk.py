"""Harmonic-extension commands: Douglas energy and the deformation bound curve."""
import numpy as np

from config import settings
from energy_cli.commands.registry import CommandResult, argument, command
from energy_cli.map_parser import parse_map
from energy_cli.reports import RunConfig
from conformal_energy.disk_extension import (
    boundary_fourier,
    deformation_bound_curve,
    deformation_derivative,
    douglas_energy,
    poisson_field,
)
from conformal_energy.energy import conformal_energy


@command("douglas", "Energy of the harmonic extension of the inverse boundary map",
         argument("--compare", action="store_true", default=None,
                  help="also compute the double-integral energy"))
def douglas_command(config: RunConfig) -> CommandResult:
    angle_map = parse_map(config.map)
    fb = boundary_fourier(angle_map.inverse(), config.M, config.sampling_factor)
    value = douglas_energy(fb)
    result = {
        "map": angle_map.describe(),
        "extension_energy": value,
        "M": fb.M,
        "samples": fb.sampling,
        "parseval_sum": fb.parseval_sum,
        "tail_energy": fb.tail_energy,
        "aliasing_advisory": fb.aliasing_advisory,
    }
    if config.option("compare", False):
        estimate = conformal_energy(angle_map, config.quadrature())
        result["energy"] = estimate.to_dict()
        result["difference"] = abs(estimate.value - value)
    return CommandResult(result, fb.to_frame())


@command("deform-curve", "Energy bound B(t) along the Beltrami deformation of the extension",
         argument("--t-points", type=int, help="points on [0, 0.99] (default 32)"),
         argument("--radial", type=int, help="radial Gauss nodes (default M)"),
         argument("--angular", type=int, help="angular midpoints (default max(M, CONFORMAL_GRID_ANGULAR))"))
def deform_curve_command(config: RunConfig) -> CommandResult:
    """
    Build the Poisson field of the inverse boundary map and tabulate B(t).

    Returns:
        CommandResult with the (t, B) table, the curve and field summaries and
        dB/dt at t = 0 and at the last retained t
    """
    angle_map = parse_map(config.map)
    fb = boundary_fourier(angle_map.inverse(), config.M, config.sampling_factor)
    radial = config.option("radial")
    angular = config.option("angular")
    grid = None
    if radial is not None or angular is not None:
        grid = (radial or fb.M, angular or max(fb.M, settings.DEFAULT_GRID_ANGULAR))
    field = poisson_field(fb, grid)
    t_grid = np.linspace(0.0, 0.99, config.option("t_points", 32))
    curve = deformation_bound_curve(field, t_grid)
    result = {
        "map": angle_map.describe(),
        "curve": curve.summary(),
        "field": field.summary(),
        "holomorphy_residual": field.holomorphy_residual(),
        "derivative_at_0": deformation_derivative(field, 0.0),
        "derivative_at_end": deformation_derivative(field, float(curve.t[-1])),
    }
    return CommandResult(result, curve.to_frame())
