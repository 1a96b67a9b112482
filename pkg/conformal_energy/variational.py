"""
First variation of the conformal energy, the critical-point residual and a
monotonicity-preserving descent over the sine basis.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from conformal_energy.circle_maps import (
    TWO_PI,
    AngleMap,
    ComposedMap,
    FourierMap,
    InverseMap,
    MapDiagnostics,
    PiecewiseLinearMap,
    SquareMap,
    SquareRootMap,
    validate,
)
from conformal_energy.energy import (
    NORMALIZATION,
    EnergyEstimate,
    QuadratureSpec,
    conformal_energy,
    discrete_energy,
)
from conformal_energy.errors import (
    NonConvergentError,
    ParameterDomainError,
    RegularityError,
    WindowError,
)
from conformal_energy.quadrature import even_singular_integral, parallel_map, tiled_rows

logger = logging.getLogger(__name__)

MAX_MODES = 32
GRADIENT_TOL = 1e-6
ARMIJO = 1e-4
MONOTONE_SAMPLES = 4096


@dataclass(frozen=True)
class Perturbation:
    """φ(t) = Σ_k c_k sin(kt), k = 1..K."""

    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float).ravel())

    @classmethod
    def mode(cls, k: int, amplitude: float = 1.0) -> "Perturbation":
        if k < 1:
            raise ParameterDomainError(f"Sine modes start at k = 1, got {k}")
        coefficients = np.zeros(k)
        coefficients[k - 1] = amplitude
        return cls(coefficients)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.coefficients.size + 1, dtype=float)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.sin(np.multiply.outer(t, self.modes)) @ self.coefficients

    def derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.cos(np.multiply.outer(t, self.modes)) @ (self.modes * self.coefficients)

    def normalized(self) -> "Perturbation":
        """Scale so that |φ'| ≤ 1 everywhere."""
        bound = float(np.sum(self.modes * np.abs(self.coefficients)))
        return Perturbation(self.coefficients / bound) if bound > 1.0 else self

    def apply(self, theta: AngleMap, scale: float = 1.0) -> FourierMap:
        return FourierMap(theta, scale * self.coefficients)


# ----------------------------
# Regularity
# ----------------------------
def require_regular(theta: AngleMap, n_samples: int = 1024) -> MapDiagnostics:
    """Refuse maps whose Hölder fit has p ≥ 2 unless the |x−y|/|θ(x)−θ(y)| integral converges."""
    diagnostics = validate(theta, n_samples)
    if not diagnostics.regular:
        raise RegularityError(
            f"Map {theta.describe()} fails the regularity certificate (p = {diagnostics.hoelder_p})",
            diagnostics.to_dict(),
        )
    return diagnostics


# ----------------------------
# First variation
# ----------------------------
def _cot_cos_row_sums(theta: AngleMap, n: int) -> Dict[str, np.ndarray]:
    """Row sums r_i = Σ_j cot(Δθ_ij/2) cos(Δt_ij) of the antisymmetric kernel on the midpoint grid."""
    h = TWO_PI / n
    t = (np.arange(n) + 0.5) * h
    values = theta(t)

    def tile(start: int, stop: int) -> np.ndarray:
        rows = np.arange(start, stop)
        with np.errstate(divide="ignore", invalid="ignore"):
            kernel = np.cos(t[rows, None] - t[None, :]) / np.tan(0.5 * (values[rows, None] - values[None, :]))
        kernel[rows - start, rows] = 0.0
        return kernel.sum(axis=1)

    return {"t": t, "h": h, "rows": tiled_rows(tile, n), "slope": theta.derivative(t)}


def first_variation_gradient(theta: AngleMap, K: int, q: Optional[QuadratureSpec] = None, check: bool = True) -> np.ndarray:
    """
    dE/dc_k along θ + c_k sin(kt) for k = 1..K, all from one pairwise pass.

    The kernel cot(Δθ/2) cos(Δt) is antisymmetric, so the double sum over
    (φ_i − φ_j) collapses to 2 Σ_i φ_i r_i with r_i its row sums.
    """
    q = q or QuadratureSpec()
    if check:
        require_regular(theta)
    pass_ = _cot_cos_row_sums(theta, q.n)
    k = np.arange(1, K + 1, dtype=float)
    t = pass_["t"]
    phi = np.sin(np.multiply.outer(k, t))
    dphi = k[:, None] * np.cos(np.multiply.outer(k, t))
    total = phi @ pass_["rows"] + dphi @ (1.0 / pass_["slope"])
    return -NORMALIZATION * pass_["h"] ** 2 * total


def first_variation(theta: AngleMap, phi: Perturbation, q: Optional[QuadratureSpec] = None, check: bool = True) -> float:
    """
    Derivative of E(θ + εφ) at ε = 0.

    Equal to −(1/2π²)·(1/2)∬ cot[(θ(x)−θ(y))/2](φ(x)−φ(y)) cos(x−y) dx dy, with the
    diagonal carrying the limit 2φ'(x)/θ'(x).

    Args:
        theta: base map; must pass the regularity certificate
        phi: sine-basis perturbation
        q: quadrature specification; only q.n is used

    Returns:
        the directional derivative of the discrete energy at level q.n
    """
    gradient = first_variation_gradient(theta, phi.coefficients.size, q, check)
    return float(gradient @ phi.coefficients)


def finite_difference_variation(theta: AngleMap, phi: Perturbation, q: Optional[QuadratureSpec] = None, step: float = 1e-4) -> float:
    """Central difference (E(θ+εφ) − E(θ−εφ))/2ε of the same discrete energy."""
    q = q or QuadratureSpec()
    plus = discrete_energy(phi.apply(theta, step), q.n, q.scheme)
    minus = discrete_energy(phi.apply(theta, -step), q.n, q.scheme)
    return (plus - minus) / (2.0 * step)


# ----------------------------
# Critical-point residual
# ----------------------------
def critical_residual(theta: AngleMap, y: float, q: Optional[QuadratureSpec] = None, check: bool = True) -> float:
    """
    R(y) = ∫₋π^π (cot[(θ(y)−θ(y−x))/2] − cot[(θ(y+x)−θ(y))/2]) cos x dx.

    The integrand is even in x; panels are graded toward x = 0.
    """
    q = q or QuadratureSpec()
    if check:
        require_regular(theta)
    center = float(theta(y))

    def integrand(x: np.ndarray) -> np.ndarray:
        left = 1.0 / np.tan(0.5 * (center - theta(y - x)))
        right = 1.0 / np.tan(0.5 * (theta(y + x) - center))
        return (left - right) * np.cos(x)

    return even_singular_integral(integrand, q.n, f"critical residual of {theta.describe()} at y={y:.6g}")


def _recentered(theta: AngleMap, y: float, recenter: bool):
    shift = 0.5 * float(theta(y - np.pi) + theta(y + np.pi)) if recenter else 0.0

    def u(t):
        values = theta(t) - shift
        if np.any(np.abs(values) >= np.pi):
            raise WindowError(
                f"tan(θ/2) has a pole inside the window around y={y:.6g}",
                {"y": y, "shift": shift},
            )
        return np.tan(0.5 * values)

    return u, shift


def u_form_factor(theta: AngleMap, y: float) -> float:
    """−(1 + ũ(y)²), the factor with critical_residual(y) = factor · u_form_residual(y)."""
    u, _ = _recentered(theta, y, True)
    return -(1.0 + float(u(y)) ** 2)


def u_form_residual(theta: AngleMap, y: float, q: Optional[QuadratureSpec] = None, recenter: bool = True, check: bool = True) -> float:
    """
    ∫₋π^π (1/(u(y+x) − u(y)) − 1/(u(y) − u(y−x))) cos x dx with u = tan(θ̃/2).

    θ̃ = θ − c with c the midpoint of θ(y−π) and θ(y+π), so the poles of u sit
    exactly at x = ±π. Without re-centering a pole inside the window raises WindowError.
    """
    q = q or QuadratureSpec()
    if check:
        require_regular(theta)
    u, _ = _recentered(theta, y, recenter)
    u0 = float(u(y))

    def integrand(x: np.ndarray) -> np.ndarray:
        return (1.0 / (u(y + x) - u0) - 1.0 / (u0 - u(y - x))) * np.cos(x)

    return even_singular_integral(integrand, q.n, f"u-form residual of {theta.describe()} at y={y:.6g}")


@dataclass(frozen=True)
class ResidualProfile:
    y: np.ndarray
    values: np.ndarray
    n: int
    form: str
    nonconvergent: List[int] = field(default_factory=list)

    @property
    def max_abs(self) -> float:
        finite = self.values[np.isfinite(self.values)]
        return float(np.max(np.abs(finite))) if finite.size else float("nan")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"y": self.y, "R": self.values})


def residual_profile(theta: AngleMap, m: int = 32, q: Optional[QuadratureSpec] = None, form: str = "cot") -> ResidualProfile:
    """
    R(y_j) on y_j = 2πj/m. Points where the panel sums do not converge are
    recorded as NaN and listed in `nonconvergent`.
    """
    q = q or QuadratureSpec()
    if form not in ("cot", "u"):
        raise ParameterDomainError(f"Unknown residual form {form!r}")
    require_regular(theta)
    y = TWO_PI * np.arange(m) / m

    def one(point: float) -> float:
        try:
            if form == "cot":
                return critical_residual(theta, point, q, check=False)
            return u_form_factor(theta, point) * u_form_residual(theta, point, q, check=False)
        except NonConvergentError as exc:
            logger.warning("%s", exc.message)
            return float("nan")

    values = np.asarray(parallel_map(one, y.tolist()), dtype=float)
    return ResidualProfile(y=y, values=values, n=q.n, form=form, nonconvergent=np.flatnonzero(np.isnan(values)).tolist())


# ----------------------------
# Möbius fit
# ----------------------------
@dataclass(frozen=True)
class MoebiusFit:
    a: float
    rot: float
    sup_distance: float

    def to_dict(self) -> Dict[str, float]:
        return {"a": self.a, "rot": self.rot, "sup_distance": self.sup_distance}


def _sup_distances(values: np.ndarray, t: np.ndarray, a_grid: np.ndarray, rot_grid: np.ndarray) -> np.ndarray:
    out = np.empty((a_grid.size, rot_grid.size))
    for i, a in enumerate(a_grid):
        lift = t + 2.0 * np.angle(1.0 - a * np.exp(-1j * t))
        diff = values[None, :] - lift[None, :] - rot_grid[:, None]
        wrapped = np.mod(diff + np.pi, TWO_PI) - np.pi
        out[i] = np.max(np.abs(wrapped), axis=1)
    return out


def fit_moebius(theta: AngleMap, n_samples: int = 1024) -> MoebiusFit:
    """
    Nearest real-a Möbius lift in sup-norm: a 64×64 grid over
    a ∈ (−0.95, 0.95), rot ∈ [0, 2π), then two 32×32 zooms around the best cell.
    """
    t = TWO_PI * np.arange(n_samples) / n_samples
    values = theta(t)
    a_grid = np.linspace(-0.95, 0.95, 64)
    rot_grid = TWO_PI * np.arange(64) / 64
    for refinement in range(3):
        distances = _sup_distances(values, t, a_grid, rot_grid)
        i, j = np.unravel_index(np.argmin(distances), distances.shape)
        best_a, best_rot, best = a_grid[i], rot_grid[j], distances[i, j]
        if refinement == 2:
            break
        da = 2.0 * (a_grid[1] - a_grid[0])
        dr = 2.0 * (rot_grid[1] - rot_grid[0])
        a_grid = np.linspace(max(best_a - da, -0.95), min(best_a + da, 0.95), 32)
        rot_grid = np.linspace(best_rot - dr, best_rot + dr, 32)
    return MoebiusFit(a=float(best_a), rot=float(np.mod(best_rot, TWO_PI)), sup_distance=float(best))


# ----------------------------
# Descent
# ----------------------------
@dataclass
class DescentTrace:
    energies: List[float] = field(default_factory=list)
    grad_norms: List[float] = field(default_factory=list)
    step_sizes: List[float] = field(default_factory=list)
    coefficients: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fit: Optional[MoebiusFit] = None
    final_energy: Optional[EnergyEstimate] = None
    converged: bool = False
    stalled: bool = False

    @property
    def steps(self) -> int:
        return len(self.step_sizes)

    def to_frame(self) -> pd.DataFrame:
        sizes = [0.0] + list(self.step_sizes)
        return pd.DataFrame({
            "step": np.arange(len(self.energies)),
            "energy": self.energies,
            "grad_norm": self.grad_norms,
            "step_size": sizes[: len(self.energies)],
        })

    def summary(self) -> Dict[str, Any]:
        return {
            "steps": self.steps,
            "converged": self.converged,
            "stalled": self.stalled,
            "initial_energy": self.energies[0] if self.energies else None,
            "final_energy": self.final_energy.to_dict() if self.final_energy else None,
            "final_grad_norm": self.grad_norms[-1] if self.grad_norms else None,
            "coefficients": [float(c) for c in self.coefficients],
            "moebius_fit": self.fit.to_dict() if self.fit else None,
        }


def _is_smooth(theta: AngleMap) -> bool:
    if isinstance(theta, (PiecewiseLinearMap, SquareMap, SquareRootMap)):
        return False
    if isinstance(theta, ComposedMap):
        return _is_smooth(theta.outer) and _is_smooth(theta.inner)
    if isinstance(theta, InverseMap):
        return _is_smooth(theta.forward)
    if isinstance(theta, FourierMap):
        return _is_smooth(theta.base)
    return True


def _monotone(angle_map: AngleMap) -> bool:
    values = angle_map(np.linspace(0.0, TWO_PI, MONOTONE_SAMPLES + 1))
    return bool(np.all(np.diff(values) > 0.0))


def descend(
    theta0: AngleMap,
    K: int = 8,
    max_steps: int = 50,
    q: Optional[QuadratureSpec] = None,
    initial_step: float = 1.0,
    min_step: float = 1e-10,
) -> DescentTrace:
    """
    Steepest descent on θ(t) = θ0(t) + Σ c_k sin(kt) with Armijo backtracking.

    Steps that break strict monotonicity of θ are rejected like steps that fail
    the Armijo test. A stall in the line search ends the run with `stalled` set.

    Args:
        theta0: smooth starting map
        K: number of sine modes (≤ 32)
        max_steps: maximum accepted steps
        q: quadrature specification for energies and gradients

    Returns:
        DescentTrace with the per-step history and the Möbius fit of the last iterate
    """
    if not 1 <= K <= MAX_MODES:
        raise ParameterDomainError(f"descend needs 1 <= K <= {MAX_MODES}, got {K}", {"K": K})
    if not _is_smooth(theta0):
        raise ParameterDomainError(f"descend runs on smooth maps only, got {theta0.describe()}")
    q = q or QuadratureSpec()
    require_regular(theta0)

    trace = DescentTrace()
    coefficients = np.zeros(K)
    current = FourierMap(theta0, coefficients)
    energy = discrete_energy(current, q.n, q.scheme)
    gradient = first_variation_gradient(current, K, q, check=False)
    trace.energies.append(energy)
    trace.grad_norms.append(float(np.linalg.norm(gradient)))
    last_step = 0.5 * initial_step

    for _ in range(max_steps):
        norm = trace.grad_norms[-1]
        if norm < GRADIENT_TOL:
            trace.converged = True
            break
        step = 2.0 * last_step
        accepted = False
        while step >= min_step:
            trial_coefficients = coefficients - step * gradient
            trial = FourierMap(theta0, trial_coefficients)
            if _monotone(trial):
                trial_energy = discrete_energy(trial, q.n, q.scheme)
                if trial_energy <= energy - ARMIJO * step * norm ** 2:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            trace.stalled = True
            logger.warning("Line search stalled after %d steps at energy %.12g", trace.steps, energy)
            break
        coefficients, current, energy, last_step = trial_coefficients, trial, trial_energy, step
        gradient = first_variation_gradient(current, K, q, check=False)
        trace.energies.append(energy)
        trace.grad_norms.append(float(np.linalg.norm(gradient)))
        trace.step_sizes.append(step)
        logger.debug("descent step %d: E=%.12g |g|=%.3e step=%.3e", trace.steps, energy, trace.grad_norms[-1], step)
    else:
        trace.converged = trace.grad_norms[-1] < GRADIENT_TOL

    trace.coefficients = coefficients
    trace.final_energy = conformal_energy(current, q)
    trace.fit = fit_moebius(current)
    logger.info(
        "descent from %s: %d steps, E %.9g -> %.9g, Möbius sup-distance %.3e",
        theta0.describe(), trace.steps, trace.energies[0], trace.energies[-1], trace.fit.sup_distance,
    )
    return trace
