"""Variational commands: first variation, critical-point residuals and descent."""
import numpy as np
import pandas as pd

from energy_cli.commands.registry import CommandResult, argument, command
from energy_cli.map_parser import parse_float_list, parse_map
from energy_cli.reports import RunConfig
from conformal_energy.errors import ParameterDomainError
from conformal_energy.variational import (
    MAX_MODES,
    Perturbation,
    critical_residual,
    descend,
    finite_difference_variation,
    first_variation_gradient,
    residual_profile,
    u_form_factor,
    u_form_residual,
)


@command("residual", "Critical-point residual R(y) on y_j = 2πj/m",
         argument("--points", type=int, help="grid size m (default 32)"),
         argument("--form", choices=("cot", "u"), help="cotangent form or tangent-substitution form"))
def residual_command(config: RunConfig) -> CommandResult:
    theta = parse_map(config.map)
    profile = residual_profile(theta, config.option("points", 32), config.quadrature(), config.option("form", "cot"))
    result = {
        "map": theta.describe(),
        "form": profile.form,
        "n": profile.n,
        "max_abs": profile.max_abs,
        "nonconvergent": profile.nonconvergent,
    }
    return CommandResult(result, profile.to_frame())


@command("u-residual", "Residual at one point in both forms",
         argument("--y", type=float, help="evaluation point (default 0)"))
def u_residual_command(config: RunConfig) -> CommandResult:
    theta = parse_map(config.map)
    y = float(config.option("y", 0.0))
    q = config.quadrature()
    u_value = u_form_residual(theta, y, q)
    factor = u_form_factor(theta, y)
    cot_value = critical_residual(theta, y, q, check=False)
    result = {
        "map": theta.describe(),
        "y": y,
        "u_residual": u_value,
        "factor": factor,
        "u_form": factor * u_value,
        "critical_residual": cot_value,
        "difference": abs(factor * u_value - cot_value),
    }
    return CommandResult(result)


@command("variation", "First variation along sine modes, with a finite-difference check",
         argument("--modes", help="comma-separated sine modes (default 1,2,3)"),
         argument("--step", type=float, help="finite-difference step (default 1e-4)"),
         argument("--no-check", dest="no_check", action="store_true", default=None,
                  help="skip the finite-difference comparison"))
def variation_command(config: RunConfig) -> CommandResult:
    """
    dE/dt along θ + t sin(kt) for each requested k.

    Returns:
        CommandResult with one row per mode: analytic value, finite difference
        and their relative difference
    """
    theta = parse_map(config.map)
    modes = [int(k) for k in parse_float_list(config.option("modes", "1,2,3"))]
    if not modes or min(modes) < 1 or max(modes) > MAX_MODES:
        raise ParameterDomainError(f"Modes must lie in 1..{MAX_MODES}", {"modes": modes})
    q = config.quadrature()
    gradient = first_variation_gradient(theta, max(modes), q)
    analytic = [float(gradient[k - 1]) for k in modes]
    rows = {"mode": modes, "first_variation": analytic}
    if not config.option("no_check", False):
        step = config.option("step", 1e-4)
        numeric = [finite_difference_variation(theta, Perturbation.mode(k), q, step) for k in modes]
        scale = np.maximum(np.abs(numeric), 1e-12)
        rows["finite_difference"] = numeric
        rows["relative_difference"] = (np.abs(np.subtract(analytic, numeric)) / scale).tolist()
    frame = pd.DataFrame(rows)
    result = {"map": theta.describe(), "n": q.n, "modes": frame.to_dict(orient="list")}
    return CommandResult(result, frame)


@command("descend", "Steepest descent of the energy over sine perturbations",
         argument("--K", dest="K", type=int, help="number of sine modes (default 8)"),
         argument("--max-steps", type=int, help="maximum accepted steps (default 50)"),
         argument("--initial-step", type=float, help="first trial step (default 1.0)"))
def descend_command(config: RunConfig) -> CommandResult:
    theta = parse_map(config.map)
    trace = descend(
        theta,
        K=config.option("K", 8),
        max_steps=config.option("max_steps", 50),
        q=config.quadrature(),
        initial_step=config.option("initial_step", 1.0),
    )
    result = {"map": theta.describe(), "trace": trace.summary()}
    return CommandResult(result, trace.to_frame())
