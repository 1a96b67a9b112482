"""
Conformal energy of a circle homeomorphism.

    E(g) = 1 − (1/2π²) ∬ log|sin(Δθ/2) / sin(Δt/2)| cos(t − s) dt ds

The identity kernel log|2 sin(Δt/2)| has been subtracted using
∬ log|2 sin(Δt/2)| cos(t − s) = −2π², which is where the constant 1 comes from.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from conformal_energy.circle_maps import (
    TWO_PI,
    AngleMap,
    IdentityMap,
    MoebiusMap,
    chordal_bilipschitz_constant,
)
from conformal_energy.errors import CertificateError, DegenerateMapError, ParameterDomainError
from conformal_energy.quadrature import graded_panels, tiled_sum

logger = logging.getLogger(__name__)

SUBTRACTED = "midpoint-subtracted"
EXCLUDED = "midpoint-excluded"
SCHEMES = (SUBTRACTED, EXCLUDED)
MIN_SLOPE = 1e-8
NORMALIZATION = 1.0 / (2.0 * np.pi ** 2)


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Tensor midpoint rule with n nodes per axis.

    The error estimate compares level n with n/2; `refine` extra coarser levels
    are kept in the series for the observed convergence order.
    """

    n: int = settings.DEFAULT_N
    scheme: str = SUBTRACTED
    refine: int = settings.DEFAULT_REFINE

    def __post_init__(self):
        if self.n < 64:
            raise ParameterDomainError(f"Quadrature needs n >= 64, got {self.n}", {"n": self.n})
        if self.n % (2 ** max(self.refine, 1)):
            raise ParameterDomainError(
                f"n={self.n} must be divisible by 2^refine for grid doubling",
                {"n": self.n, "refine": self.refine},
            )
        if self.refine < 1:
            raise ParameterDomainError("refine must be at least 1 so an error estimate exists", {"refine": self.refine})
        if self.scheme not in SCHEMES:
            raise ParameterDomainError(f"Unknown scheme {self.scheme!r}", {"schemes": list(SCHEMES)})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    err: float
    n_used: int
    method: str
    levels: List[Tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "err": self.err, "n_used": self.n_used, "method": self.method}


# ----------------------------
# Discrete functionals
# ----------------------------
def _nodes(angle_map: AngleMap, n: int) -> Tuple[float, np.ndarray, np.ndarray]:
    h = TWO_PI / n
    t = (np.arange(n) + 0.5) * h
    return h, t, angle_map(t)


def _check_slopes(angle_map: AngleMap, theta: np.ndarray, h: float) -> None:
    gaps = np.diff(np.append(theta, theta[0] + TWO_PI)) / h
    worst = int(np.argmin(gaps))
    if not gaps[worst] >= MIN_SLOPE:
        raise DegenerateMapError(
            f"Map {angle_map.describe()} has grid slope {gaps[worst]:.3e} < {MIN_SLOPE:g}; run validate() on it",
            {"node": worst, "slope": float(gaps[worst])},
        )


def _raise_on_nonfinite(values: np.ndarray, start: int, angle_map: AngleMap) -> None:
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        i, j = bad[0]
        raise DegenerateMapError(
            f"Energy integrand of {angle_map.describe()} is not finite at node pair ({start + i}, {j})",
            {"pair": [int(start + i), int(j)]},
        )


def discrete_energy(angle_map: AngleMap, n: int, scheme: str = SUBTRACTED) -> float:
    """Single-level energy on the n×n midpoint grid; the functional the variational module differentiates."""
    h, t, theta = _nodes(angle_map, n)
    _check_slopes(angle_map, theta, h)
    slope = angle_map.derivative(t)
    if scheme == SUBTRACTED:
        diagonal = np.log(slope)
    else:
        diagonal = np.log(slope * h) - 1.5

    def tile(start: int, stop: int) -> np.ndarray:
        rows = np.arange(start, stop)
        dt = t[rows, None] - t[None, :]
        dth = theta[rows, None] - theta[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            if scheme == SUBTRACTED:
                kernel = np.log(np.abs(np.sin(0.5 * dth) / np.sin(0.5 * dt)))
            else:
                kernel = np.log(np.abs(2.0 * np.sin(0.5 * dth)))
        kernel[rows - start, rows] = diagonal[rows]
        _raise_on_nonfinite(kernel, start, angle_map)
        return (kernel * np.cos(dt)).sum(axis=1)

    total = tiled_sum(tile, n) * h * h
    if scheme == SUBTRACTED:
        return 1.0 - NORMALIZATION * total
    return -NORMALIZATION * total


def conformal_energy(angle_map: AngleMap, q: Optional[QuadratureSpec] = None) -> EnergyEstimate:
    """
    Energy with an error estimate from grid halving.

    Args:
        angle_map: validated circle homeomorphism
        q: quadrature specification (defaults from config.settings)

    Returns:
        EnergyEstimate with value at q.n and err = |E(n) − E(n/2)|
    """
    q = q or QuadratureSpec()
    sizes = [q.n // 2 ** k for k in range(q.refine, -1, -1)]
    levels = [(size, discrete_energy(angle_map, size, q.scheme)) for size in sizes]
    value = levels[-1][1]
    err = abs(levels[-1][1] - levels[-2][1])
    logger.debug("energy of %s: %s", angle_map.describe(), levels)
    return EnergyEstimate(value=value, err=err, n_used=q.n, method=q.scheme, levels=levels)


def energy_oracle(angle_map: AngleMap, n: int) -> float:
    """
    Plain midpoint rule on −(1/2π²) log|2 sin(Δθ/2)| cos(t − s) without subtraction.

    Diagonal cells carry the cell integral of the local kernel, h²(log(θ'h) − 3/2).
    """
    if n < 64:
        raise ParameterDomainError(f"energy_oracle needs n >= 64, got {n}")
    return discrete_energy(angle_map, n, EXCLUDED)


def energy_series(angle_map: AngleMap, ns: Sequence[int], scheme: str = SUBTRACTED) -> Dict[str, Any]:
    """Energies at increasing n plus the observed order from the last three levels."""
    ns = sorted(int(n) for n in ns)
    values = [discrete_energy(angle_map, n, scheme) for n in ns]
    order = None
    if len(values) >= 3:
        d1 = abs(values[-2] - values[-3])
        d2 = abs(values[-1] - values[-2])
        if d1 > 0 and d2 > 0:
            order = math.log2(d1 / d2)
    return {"n": ns, "values": values, "observed_order": order}


def complex_kernel_imaginary_part(angle_map: AngleMap, n: int) -> float:
    """Imaginary part of the energy with the full e^{i(t−s)} kernel; vanishes by antisymmetry."""
    h, t, theta = _nodes(angle_map, n)
    _check_slopes(angle_map, theta, h)

    def tile(start: int, stop: int) -> np.ndarray:
        rows = np.arange(start, stop)
        dt = t[rows, None] - t[None, :]
        dth = theta[rows, None] - theta[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            kernel = np.log(np.abs(np.sin(0.5 * dth) / np.sin(0.5 * dt)))
        kernel[rows - start, rows] = 0.0
        return (kernel * np.sin(dt)).sum(axis=1)

    return -NORMALIZATION * tiled_sum(tile, n) * h * h


def log_sin_moment(k: int, n: int = 48) -> float:
    """
    ∫₀^{2π} log|2 sin(u/2)| cos(ku) du, whose exact value is −π/k.

    Uses symmetry about π and n geometrically graded Gauss panels toward u = 0.
    """
    if k < 1:
        raise ParameterDomainError(f"log_sin_moment needs k >= 1, got {k}")
    if n < 1:
        raise ParameterDomainError(f"log_sin_moment needs n >= 1 panels, got {n}")

    def integrand(u: np.ndarray) -> np.ndarray:
        return np.log(2.0 * np.sin(0.5 * u)) * np.cos(k * u)

    pieces = max(1, int(math.ceil(k / 2)))
    value, _ = graded_panels(integrand, np.pi, order=16, pieces=pieces, tol=0.0, max_panels=n)
    return 2.0 * value


# ----------------------------
# Invariance checks
# ----------------------------
def invariance_gap(angle_map: AngleMap, phi: AngleMap, q: Optional[QuadratureSpec] = None) -> float:
    """|E(φ ∘ map) − E(map)| for a Möbius boundary map φ."""
    if isinstance(phi, IdentityMap) or (isinstance(phi, MoebiusMap) and phi.a == 0 and phi.rot == 0.0):
        return 0.0
    if not isinstance(phi, MoebiusMap):
        raise ParameterDomainError(f"invariance_gap needs a Möbius map, got {phi.describe()}")
    q = q or QuadratureSpec()
    return abs(conformal_energy(phi.compose(angle_map), q).value - conformal_energy(angle_map, q).value)


@dataclass(frozen=True)
class BilipReport:
    L: float
    sampled_L: float
    energy_g: EnergyEstimate
    energy_fg: EnergyEstimate
    energy_f: EnergyEstimate
    lower_bound: float
    upper_bound: float
    lower_ok: bool
    upper_ok: bool
    standalone_bound: float
    standalone_ok: bool
    unshifted_standalone_bound: float
    unshifted_standalone_ok: bool

    @property
    def discrepancy_flag(self) -> bool:
        return self.standalone_ok != self.unshifted_standalone_ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            "L": self.L,
            "sampled_L": self.sampled_L,
            "energy_g": self.energy_g.to_dict(),
            "energy_fg": self.energy_fg.to_dict(),
            "energy_f": self.energy_f.to_dict(),
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "lower_ok": self.lower_ok,
            "upper_ok": self.upper_ok,
            "standalone_bound": self.standalone_bound,
            "standalone_ok": self.standalone_ok,
            "unshifted_standalone_bound": self.unshifted_standalone_bound,
            "unshifted_standalone_ok": self.unshifted_standalone_ok,
            "discrepancy_flag": self.discrepancy_flag,
        }


def bilip_bounds_report(
    f: AngleMap,
    g: AngleMap,
    L: float,
    q: Optional[QuadratureSpec] = None,
    certificate_samples: int = 1024,
) -> BilipReport:
    """
    Check max{1, E(g) − log L/π²} ≤ E(f∘g) ≤ E(g) + log L/(2π²) for an L-bilipschitz f.

    E(f) alone is tested against 1 + log L/(2π²) and against the unshifted
    log L/(2π²); discrepancy_flag is set when the two verdicts differ.
    """
    if not L >= 1.0:
        raise ParameterDomainError(f"Bilipschitz constant must be >= 1, got {L}", {"L": L})
    sampled, _, _ = chordal_bilipschitz_constant(f, certificate_samples)
    if sampled > L * (1.0 + 1e-9):
        raise CertificateError(
            f"{f.describe()} is not {L}-bilipschitz on {certificate_samples} samples (sampled constant {sampled:.6g})",
            {"L": L, "sampled_L": sampled},
        )
    q = q or QuadratureSpec()
    e_g = conformal_energy(g, q)
    e_fg = conformal_energy(f.compose(g), q)
    e_f = conformal_energy(f, q)
    log_l = math.log(L)
    lower = max(1.0, e_g.value - log_l / np.pi ** 2)
    upper = e_g.value + log_l / (2.0 * np.pi ** 2)
    tol = e_g.err + e_fg.err + 1e-12
    standalone = 1.0 + log_l / (2.0 * np.pi ** 2)
    unshifted = log_l / (2.0 * np.pi ** 2)
    report = BilipReport(
        L=L,
        sampled_L=sampled,
        energy_g=e_g,
        energy_fg=e_fg,
        energy_f=e_f,
        lower_bound=lower,
        upper_bound=upper,
        lower_ok=bool(e_fg.value >= lower - tol),
        upper_ok=bool(e_fg.value <= upper + tol),
        standalone_bound=standalone,
        standalone_ok=bool(e_f.value <= standalone + e_f.err + 1e-12),
        unshifted_standalone_bound=unshifted,
        unshifted_standalone_ok=bool(e_f.value <= unshifted + e_f.err + 1e-12),
    )
    if report.discrepancy_flag:
        logger.warning("Standalone bilipschitz bound holds only in the corrected form 1 + log L/(2π²)")
    return report
