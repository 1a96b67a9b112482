"""
Reproduction studies and the acceptance suite.

study-pwl sweeps the piecewise-linear family f_λ, study-square evaluates the
square map and its inverse, and suite checks every acceptance criterion and
exits nonzero when one fails.
"""
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from energy_cli.commands.registry import CommandResult, argument, command
from energy_cli.map_parser import parse_float_list, parse_map
from energy_cli.reports import RunConfig
from conformal_energy.circle_maps import TWO_PI, identity, invert, make_moebius, make_pwl, make_square
from conformal_energy.disk_extension import (
    boundary_fourier,
    deformation_bound_curve,
    douglas_energy,
    extension_energy,
    poisson_field,
)
from conformal_energy.energy import QuadratureSpec, conformal_energy, energy_oracle, invariance_gap
from conformal_energy.errors import ConformalEnergyError
from conformal_energy.moebius_bounds import cr_distortion_scan, cross_ratio, identity_gauge, linear_gauge, qm_energy_bound
from conformal_energy.variational import (
    Perturbation,
    descend,
    finite_difference_variation,
    first_variation_gradient,
    residual_profile,
)

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = tuple(np.geomspace(1e-3, 1e-1, 5).tolist())
SUITE_LAMBDAS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
# (2 − 2cos 1)|log λ| growth divided by the 2π² normalization
PWL_INVERSE_SLOPE = (2.0 - 2.0 * math.cos(1.0)) / (2.0 * math.pi ** 2)
CONVERGED = 1e-3


# ----------------------------
# Studies
# ----------------------------
def scaled_n(n: int, lam: float, scale: bool = True) -> int:
    """Smallest power of two ≥ max(n, 4/λ), so the steep segment spans a few cells."""
    if not scale:
        return n
    return max(n, 2 ** int(math.ceil(math.log2(4.0 / lam))))


def pwl_study(
    lambdas: Sequence[float],
    n: int,
    refine: int,
    scheme: str,
    scale: bool = True,
    oracle_n: int = 4096,
) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """
    E(f_λ) and E(f_λ^{-1}) over λ with a regression of the latter on log(1/λ).

    Args:
        lambdas: values in (0, 1]
        n: base quadrature size, raised per λ when `scale` is set
        oracle_n: grid of the unsubtracted rule used for the regression

    Returns:
        (table, summary) where the summary holds both slopes and the spread of E(f_λ)
    """
    rows: List[Dict[str, Any]] = []
    for lam in sorted(lambdas, reverse=True):
        size = scaled_n(n, lam, scale)
        q = QuadratureSpec(n=size, scheme=scheme, refine=refine)
        forward = make_pwl(lam)
        backward = invert(forward)
        energy = conformal_energy(forward, q)
        inverse = conformal_energy(backward, q)
        oracle = energy_oracle(backward, max(oracle_n, size))
        logger.info("pwl lambda=%g n=%d: E(f)=%.6f E(f^-1)=%.6f", lam, size, energy.value, inverse.value)
        rows.append({
            "lambda": lam,
            "log_inv_lambda": math.log(1.0 / lam),
            "n": size,
            "energy": energy.value,
            "energy_err": energy.err,
            "inverse_energy": inverse.value,
            "inverse_err": inverse.err,
            "inverse_oracle": oracle,
        })
    frame = pd.DataFrame(rows)
    summary: Dict[str, Any] = {
        "expected_slope": PWL_INVERSE_SLOPE,
        "energy_spread": float((frame["energy"].max() - frame["energy"].min()) / frame["energy"].min()),
        "slope": None,
        "oracle_slope": None,
    }
    if len(frame) >= 2:
        summary["slope"], summary["intercept"] = (float(v) for v in np.polyfit(frame["log_inv_lambda"], frame["inverse_energy"], 1))
        summary["oracle_slope"] = float(np.polyfit(frame["log_inv_lambda"], frame["inverse_oracle"], 1)[0])
        summary["oracle_slope_relative_error"] = abs(summary["oracle_slope"] - PWL_INVERSE_SLOPE) / PWL_INVERSE_SLOPE
    return frame, summary


def square_distortion_trend(deltas: Sequence[float] = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)) -> pd.DataFrame:
    """Quadruples (0, −δ, δ, −2δ) keep cr_in ≈ 3 while the square map sends cr_out to ≈ 2/δ."""
    square = make_square()
    deltas = np.asarray(deltas, dtype=float)
    quads = np.column_stack([np.zeros_like(deltas), -deltas, deltas, -2.0 * deltas])
    images = square(quads)
    cr_in = cross_ratio(*quads.T)
    cr_out = cross_ratio(*images.T)
    return pd.DataFrame({"delta": deltas, "cr_in": cr_in, "cr_out": cr_out, "distortion": cr_out / cr_in})


def square_study(q: QuadratureSpec, quadruples: int = 20000, seed: int = 0) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    forward = make_square()
    backward = invert(forward)
    energy = conformal_energy(forward, q)
    inverse = conformal_energy(backward, q)
    trend = square_distortion_trend()
    scan = cr_distortion_scan(forward, quadruples, seed)
    summary = {
        "energy": energy.to_dict(),
        "inverse_energy": inverse.to_dict(),
        "converged": bool(energy.err <= CONVERGED and inverse.err <= CONVERGED),
        "envelope": scan.summary(),
        "distortion_increasing": bool(np.all(np.diff(trend["distortion"].to_numpy()) > 0.0)),
    }
    return trend, summary


@command("study-pwl", "Energies of the piecewise-linear family and its inverses over λ",
         argument("--lambdas", help="comma-separated λ values (default 5 log-spaced in [1e-3, 1e-1])"),
         argument("--no-scale-n", dest="no_scale_n", action="store_true", default=None,
                  help="use --n for every λ instead of raising it for small λ"),
         argument("--oracle-n", type=int, help="grid of the unsubtracted inverse energy (default 4096)"))
def study_pwl_command(config: RunConfig) -> CommandResult:
    lambdas = parse_float_list(config.option("lambdas")) if config.option("lambdas") else list(DEFAULT_LAMBDAS)
    frame, summary = pwl_study(
        lambdas,
        config.n,
        config.refine,
        config.scheme,
        scale=not config.option("no_scale_n", False),
        oracle_n=config.option("oracle_n", 4096),
    )
    return CommandResult({"summary": summary, "rows": frame.to_dict(orient="records")}, frame)


@command("study-square", "Energies of the square map pair and its distortion trend near 0",
         argument("--quadruples", type=int, help="random quadruples for the envelope scan (default 20000)"))
def study_square_command(config: RunConfig) -> CommandResult:
    trend, summary = square_study(config.quadrature(), config.option("quadruples", 20000), config.seed)
    summary["trend"] = trend.to_dict(orient="records")
    return CommandResult(summary, trend)


# ----------------------------
# Acceptance suite
# ----------------------------
def _criterion(number: int, name: str, passed: bool, observed: Any, threshold: Any) -> Dict[str, Any]:
    return {"criterion": number, "name": name, "passed": bool(passed), "observed": observed, "threshold": threshold}


def check_moebius_energy(config: RunConfig) -> Dict[str, Any]:
    q = config.quadrature()
    deviations = [
        abs(conformal_energy(make_moebius(a, rot), q).value - 1.0)
        for a in (0.0, 0.3, 0.6)
        for rot in (0.0, 1.1)
    ]
    worst = max(deviations)
    return _criterion(1, "moebius energy", worst <= 5e-4, worst, 5e-4)


def check_bound_identity(config: RunConfig) -> Dict[str, Any]:
    errors = [abs(qm_energy_bound(identity_gauge()) - 1.0)]
    for alpha in (2.0, math.exp(math.pi)):
        errors.append(abs(qm_energy_bound(linear_gauge(alpha)) - (1.0 + math.log(alpha) / math.pi)))
    worst = max(errors)
    return _criterion(2, "bound integral identity", worst <= 1e-8, worst, 1e-8)


def check_invariance(config: RunConfig) -> Dict[str, Any]:
    rng = np.random.default_rng(config.seed)
    q = config.quadrature()
    gaps = []
    for _ in range(2):
        radius, angle, rot = rng.uniform(0.0, 0.6), rng.uniform(0.0, TWO_PI), rng.uniform(0.0, TWO_PI)
        phi = make_moebius(radius * np.exp(1j * angle), rot)
        for angle_map in (make_square(), make_pwl(0.1)):
            gaps.append(invariance_gap(angle_map, phi, q))
    worst = max(gaps)
    return _criterion(3, "conformal invariance", worst <= 2e-3, worst, 2e-3)


def check_dual_agreement(config: RunConfig) -> Dict[str, Any]:
    q = config.quadrature()
    excess = []
    for angle_map in (identity(), make_moebius(0.5, 0.7), make_square()):
        estimate = conformal_energy(angle_map, q)
        other = extension_energy(angle_map, config.M, config.sampling_factor)
        excess.append(abs(estimate.value - other) - estimate.err)
    worst = max(excess)
    return _criterion(4, "double integral vs harmonic extension", worst <= 1e-3, worst, 1e-3)


def check_pwl_study(config: RunConfig) -> Dict[str, Any]:
    _, summary = pwl_study(SUITE_LAMBDAS, config.n, config.refine, config.scheme)
    passed = summary["energy_spread"] < 0.10 and summary["oracle_slope_relative_error"] <= 0.25
    observed = {"energy_spread": summary["energy_spread"], "oracle_slope": summary["oracle_slope"]}
    threshold = {"energy_spread": 0.10, "slope": PWL_INVERSE_SLOPE, "slope_relative": 0.25}
    return _criterion(5, "piecewise-linear study", passed, observed, threshold)


def check_square_pair(config: RunConfig) -> Dict[str, Any]:
    trend, summary = square_study(config.quadrature(), seed=config.seed)
    observed = {
        "energy_err": summary["energy"]["err"],
        "inverse_err": summary["inverse_energy"]["err"],
        "max_distortion": float(trend["distortion"].max()),
    }
    return _criterion(6, "square map pair finite", summary["converged"], observed, CONVERGED)


def check_cross_ratio_witnesses(config: RunConfig) -> Dict[str, Any]:
    lam = 1e-3
    value = float(cross_ratio(1 + 0j, np.exp(1j * lam), -1 + 0j, np.exp(1.5j * np.pi)))
    relative = abs(value - 0.5 * lam) / (0.5 * lam)
    lam_pwl = 1e-2
    scan = cr_distortion_scan(make_pwl(lam_pwl), 20000, config.seed)
    eta_2 = float(scan.eta_hat_at(2.0))
    passed = relative <= 0.05 and eta_2 >= 1.0 / lam_pwl
    observed = {"cross_ratio_relative_error": relative, "eta_hat_at_2": eta_2}
    return _criterion(7, "cross-ratio witnesses", passed, observed, {"relative": 0.05, "eta_hat_at_2": 1.0 / lam_pwl})


VARIATION_CORPUS = (
    "fourier:c2=0.2",
    "fourier:c1=0.1,c3=0.05",
    "square",
    "pwl:lambda=0.5",
    "comp(mobius:a=0.3+0i,rot=0,fourier:c2=0.1)",
)


def check_variational(config: RunConfig) -> Dict[str, Any]:
    q = config.quadrature()
    worst_relative = 0.0
    for expr in VARIATION_CORPUS:
        theta = parse_map(expr)
        gradient = first_variation_gradient(theta, 3, q)
        for k in (1, 2, 3):
            numeric = finite_difference_variation(theta, Perturbation.mode(k), q)
            relative = abs(gradient[k - 1] - numeric) / max(abs(numeric), 1e-4)
            worst_relative = max(worst_relative, float(relative))
    moebius_max = residual_profile(make_moebius(0.3, 0.0), 32, q).max_abs
    square_max = residual_profile(make_square(), 32, q).max_abs
    passed = worst_relative <= 1e-4 and moebius_max <= 1e-3 and square_max >= 1e-2
    observed = {"relative": worst_relative, "moebius_residual": moebius_max, "square_residual": square_max}
    return _criterion(8, "variational consistency", passed, observed, {"relative": 1e-4, "moebius": 1e-3, "square": 1e-2})


def check_descent(config: RunConfig) -> Dict[str, Any]:
    q = config.quadrature()
    trace = descend(parse_map("fourier:c2=0.2"), K=8, max_steps=50, q=q)
    decreasing = bool(np.all(np.diff(trace.energies) < 0.0))
    floor_ok = trace.final_energy.value >= 1.0 - trace.final_energy.err - 1e-12
    observed = {
        "steps": trace.steps,
        "final_energy": trace.final_energy.value,
        "near_one": abs(trace.final_energy.value - 1.0) <= 1e-3,
        "sup_distance": trace.fit.sup_distance if trace.fit else None,
    }
    return _criterion(9, "descent toward the Möbius family", decreasing and floor_ok, observed, "decreasing, E >= 1 - err")


DEFORMATION_MIN_M = 1024


def check_deformation_curve(config: RunConfig) -> Dict[str, Any]:
    """B(0) converges like the Fourier tail, so the square needs M >= 1024 for the 1e-6 target."""
    M = max(config.M, DEFORMATION_MIN_M)
    fb = boundary_fourier(invert(make_square()), M, config.sampling_factor)
    curve = deformation_bound_curve(poisson_field(fb))
    target = douglas_energy(fb)
    b0_error = abs(curve.b0 - 1.0)
    limit_error = abs(curve.b_limit - target)
    passed = b0_error <= 1e-6 and curve.strictly_increasing and limit_error <= 1e-3
    observed = {
        "M": M,
        "B0_error": b0_error,
        "strictly_increasing": curve.strictly_increasing,
        "truncated": curve.truncated,
        "t_limit": curve.t_limit,
        "limit_error": limit_error,
    }
    return _criterion(10, "deformation curve", passed, observed, {"B0": 1e-6, "limit": 1e-3})


FLOOR_CORPUS = (
    "identity",
    "mobius:a=0.3+0i,rot=0",
    "mobius:a=0.2+0.4i,rot=1.1",
    "pwl:lambda=0.1",
    "inv(pwl:lambda=0.1)",
    "square",
    "inv(square)",
    "fourier:c2=0.2",
    "comp(mobius:a=0.3+0i,rot=0,square)",
)


def check_energy_floor(config: RunConfig) -> Dict[str, Any]:
    q = config.quadrature()
    margins = []
    for expr in FLOOR_CORPUS:
        estimate = conformal_energy(parse_map(expr), q)
        margins.append(estimate.value - (1.0 - estimate.err - 1e-12))
    worst = min(margins)
    return _criterion(11, "energy floor", worst >= 0.0, worst, 0.0)


CRITERIA: Tuple[Callable[[RunConfig], Dict[str, Any]], ...] = (
    check_moebius_energy,
    check_bound_identity,
    check_invariance,
    check_dual_agreement,
    check_pwl_study,
    check_square_pair,
    check_cross_ratio_witnesses,
    check_variational,
    check_descent,
    check_deformation_curve,
    check_energy_floor,
)


def run_suite(config: RunConfig, only: Optional[Sequence[int]] = None) -> List[Dict[str, Any]]:
    results = []
    for number, check in enumerate(CRITERIA, start=1):
        if only and number not in only:
            continue
        try:
            outcome = check(config)
        except ConformalEnergyError as exc:
            logger.error("Criterion %d raised %s: %s", number, type(exc).__name__, exc.message)
            outcome = _criterion(number, check.__name__, False, exc.to_report(), None)
        logger.info("Criterion %d (%s): %s", number, outcome["name"], "pass" if outcome["passed"] else "FAIL")
        results.append(outcome)
    return results


@command("suite", "Run the acceptance criteria; exits 1 when any fails",
         argument("--only", help="comma-separated criterion numbers"))
def suite_command(config: RunConfig) -> CommandResult:
    only = [int(v) for v in parse_float_list(config.option("only"))] if config.option("only") else None
    results = run_suite(config, only)
    frame = pd.DataFrame({
        "criterion": [r["criterion"] for r in results],
        "name": [r["name"] for r in results],
        "passed": [r["passed"] for r in results],
    })
    passed = all(r["passed"] for r in results)
    return CommandResult({"passed": passed, "criteria": results}, frame, passed=passed)
