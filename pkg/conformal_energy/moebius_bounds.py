"""
Cross ratios on the circle, empirical cross-ratio distortion of a map and the
quasi-Möbius energy bound

    E(g) ≤ (1/π) ∫₀^{π/2} log η(cot²(t/2)) cos t dt.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from conformal_energy.circle_maps import TWO_PI, AngleMap
from conformal_energy.energy import EnergyEstimate, QuadratureSpec, conformal_energy
from conformal_energy.errors import (
    DegenerateQuadrupleError,
    NonIntegrableGaugeError,
    ParameterDomainError,
)
from conformal_energy.quadrature import gauss_panel

logger = logging.getLogger(__name__)

SEPARATION = 1e-3
ENVELOPE_EDGES = np.geomspace(1e-4, 1e4, 65)
# each factor of η̂(t)η̂(1/t) may lag its bin edge by one bin
RECIPROCAL_TOLERANCE = 1.0 - float(ENVELOPE_EDGES[0] / ENVELOPE_EDGES[1]) ** 2
PANEL_TOL = 1e-12


# ----------------------------
# Cross ratios
# ----------------------------
def _chord(x, y, points: bool = False) -> np.ndarray:
    if points:
        return np.abs(np.asarray(x, dtype=complex) - np.asarray(y, dtype=complex))
    return 2.0 * np.abs(np.sin(0.5 * (np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))


def cross_ratio(a, b, c, d) -> np.ndarray:
    """
    [a, b, c, d] = |a − b||c − d| / (|a − c||b − d|).

    Points are given either as complex numbers on the circle or as angles in
    radians; arrays broadcast.
    """
    points = any(np.iscomplexobj(x) for x in (a, b, c, d))
    ab, cd, ac, bd = (_chord(x, y, points) for x, y in ((a, b), (c, d), (a, c), (b, d)))
    chords = np.stack(np.broadcast_arrays(ab, cd, ac, bd, _chord(a, d, points), _chord(b, c, points)))
    if np.any(chords <= 1e-15):
        raise DegenerateQuadrupleError("Cross ratio needs four distinct points", {"min_chord": float(chords.min())})
    return ab * cd / (ac * bd)


def pwl_image_cross_ratio() -> float:
    """
    [1, e^{i}, e^{iαπ}, e^{3iαπ/2}] with α = (2π − 1)/(2π), the image quadruple
    quoted for the piecewise-linear example.
    """
    alpha = (TWO_PI - 1.0) / TWO_PI
    return float(cross_ratio(0.0, 1.0, alpha * np.pi, 1.5 * alpha * np.pi))


# ----------------------------
# Gauges
# ----------------------------
@dataclass(frozen=True)
class DistortionGauge:
    """Increasing control function η on [0, ∞]."""

    kind: str
    alpha: float = 1.0
    t_values: Optional[np.ndarray] = None
    eta_values: Optional[np.ndarray] = None
    low_exponent: float = 1.0
    high_exponent: float = 1.0

    @property
    def extrapolation(self) -> str:
        return "power-law" if self.kind == "tabulated" else "closed-form"

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "identity":
            return t.copy()
        if self.kind == "linear":
            return self.alpha * t
        log_t, log_eta = np.log(self.t_values), np.log(self.eta_values)
        with np.errstate(divide="ignore"):
            x = np.log(t)
        inside = np.interp(x, log_t, log_eta)
        below = log_eta[0] + self.low_exponent * (x - log_t[0])
        above = log_eta[-1] + self.high_exponent * (x - log_t[-1])
        return np.exp(np.where(x < log_t[0], below, np.where(x > log_t[-1], above, inside)))

    def reciprocal_products(self, t: Sequence[float]) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self(t) * self(1.0 / t)

    def describe(self) -> str:
        if self.kind == "linear":
            return f"linear:alpha={self.alpha!r}"
        if self.kind == "tabulated":
            return f"tabulated[{len(self.t_values)} points]"
        return self.kind


def identity_gauge() -> DistortionGauge:
    return DistortionGauge("identity")


def linear_gauge(alpha: float) -> DistortionGauge:
    if not alpha >= 1.0:
        raise ParameterDomainError(f"Linear gauge needs alpha >= 1, got {alpha}", {"alpha": alpha})
    return DistortionGauge("linear", alpha=float(alpha))


def tabulated_gauge(t_values: Sequence[float], eta_values: Sequence[float]) -> DistortionGauge:
    """
    Log-log interpolation through the pairs with power-law extrapolation from the
    end segments. The low-end exponent is kept positive so η(0) = 0.
    """
    t = np.asarray(t_values, dtype=float)
    eta = np.asarray(eta_values, dtype=float)
    if t.ndim != 1 or t.shape != eta.shape or t.size < 2:
        raise ParameterDomainError("Tabulated gauge needs at least two (t, eta) pairs")
    if np.any(t <= 0) or np.any(eta <= 0) or np.any(np.diff(t) <= 0) or np.any(np.diff(eta) < 0):
        raise ParameterDomainError("Tabulated gauge needs positive increasing t and non-decreasing positive eta")
    lt, le = np.log(t), np.log(eta)
    low = max((le[1] - le[0]) / (lt[1] - lt[0]), 1e-3)
    high = max((le[-1] - le[-2]) / (lt[-1] - lt[-2]), 0.0)
    return DistortionGauge("tabulated", t_values=t, eta_values=eta, low_exponent=low, high_exponent=high)


def bound_from_gauge(eta: Callable[[np.ndarray], np.ndarray], order: int = 16, max_panels: int = 400) -> float:
    """
    (1/π) ∫₀^{π/2} log η(cot²(t/2)) cos t dt on panels graded toward t = 0.

    Raises NonIntegrableGaugeError when η is not positive on the panels or
    when the panel contributions stop decaying.
    """

    def integrand(t: np.ndarray) -> np.ndarray:
        values = eta(1.0 / np.tan(0.5 * t) ** 2)
        if np.any(~(values > 0)) or np.any(~np.isfinite(values)):
            raise NonIntegrableGaugeError("Gauge is not positive and finite on (0, ∞)")
        return np.log(values) * np.cos(t)

    contributions: List[float] = []
    hi = 0.5 * np.pi
    for _ in range(max_panels):
        lo = 0.5 * hi
        contributions.append(gauss_panel(integrand, lo, hi, order))
        if abs(contributions[-1]) < PANEL_TOL:
            break
        if len(contributions) > 12 and abs(contributions[-1]) >= 0.99 * abs(contributions[-2]) >= 0.99 ** 2 * abs(contributions[-3]):
            raise NonIntegrableGaugeError(
                "Bound integrand is not integrable at t = 0",
                {"last_contributions": [float(c) for c in contributions[-3:]]},
            )
        hi = lo
    else:
        raise NonIntegrableGaugeError("Bound integral did not settle", {"panels": max_panels})
    logger.debug("bound integral: %d panels", len(contributions))
    return math.fsum(contributions) / np.pi


def qm_energy_bound(eta: DistortionGauge, n: int = 16) -> float:
    """Energy bound for an η-quasi-Möbius map; n is the Gauss order per panel."""
    if n < 2:
        raise ParameterDomainError(f"Gauss order must be >= 2, got {n}")
    return bound_from_gauge(eta, order=n)


# ----------------------------
# Empirical distortion
# ----------------------------
@dataclass(frozen=True)
class EnvelopeReport:
    t: np.ndarray
    eta_hat: np.ndarray
    support_count: np.ndarray
    gaps: np.ndarray
    alpha_hat: float
    max_deviation: float
    max_relative_deviation: float
    min_reciprocal_product: float
    n_samples: int
    seed: int
    cr_in: np.ndarray = field(repr=False, default=None)
    cr_out: np.ndarray = field(repr=False, default=None)

    def eta_hat_at(self, t) -> np.ndarray:
        """max{cr_out : cr_in ≤ t}; NaN where no sample qualifies."""
        order = np.argsort(self.cr_in, kind="stable")
        running = np.maximum.accumulate(self.cr_out[order])
        idx = np.searchsorted(self.cr_in[order], np.asarray(t, dtype=float), side="right") - 1
        return np.where(idx >= 0, running[np.maximum(idx, 0)], np.nan)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.t, "eta_hat": self.eta_hat, "support_count": self.support_count})

    def gauge(self) -> DistortionGauge:
        keep = np.isfinite(self.eta_hat) & (self.eta_hat > 0)
        return tabulated_gauge(self.t[keep], self.eta_hat[keep])

    def upper_gauge(self) -> DistortionGauge:
        """η̂(ρt) with ρ the ratio of neighbouring bin edges."""
        step = ENVELOPE_EDGES[1] / ENVELOPE_EDGES[0]
        values = self.eta_hat_at(self.t * step)
        keep = np.isfinite(values) & (values > 0)
        return tabulated_gauge(self.t[keep], values[keep])

    @property
    def gauge_consistent(self) -> bool:
        return bool(self.min_reciprocal_product >= 1.0 - RECIPROCAL_TOLERANCE)

    def summary(self) -> Dict[str, Any]:
        return {
            "alpha_hat": self.alpha_hat,
            "max_deviation": self.max_deviation,
            "max_relative_deviation": self.max_relative_deviation,
            "min_reciprocal_product": self.min_reciprocal_product,
            "gauge_consistent": self.gauge_consistent,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "empty_bins": int(np.count_nonzero(self.gaps)),
            "eta_hat_at_2": float(self.eta_hat_at(2.0)),
        }


def witness_quadruples() -> np.ndarray:
    """
    Deterministic adversarial quadruples: (0, δ, π, 3π/2) and the straddling
    family (0, δ, −0.51δ, −D), each also rotated by a few base angles.
    """
    deltas = np.geomspace(2e-3, 0.5, 48)
    rows = [np.column_stack([np.zeros_like(deltas), deltas, np.full_like(deltas, np.pi), np.full_like(deltas, 1.5 * np.pi)])]
    for far in (2.0, np.pi, 4.0):
        rows.append(np.column_stack([np.zeros_like(deltas), deltas, -0.51 * deltas, np.full_like(deltas, -far)]))
    base = np.vstack(rows)
    return np.vstack([base + shift for shift in (0.0, 1.0, np.pi)])


def _separated(quads: np.ndarray) -> np.ndarray:
    ok = np.ones(len(quads), dtype=bool)
    for i in range(4):
        for j in range(i + 1, 4):
            ok &= _chord(quads[:, i], quads[:, j]) >= SEPARATION
    return ok


def sample_quadruples(n_quadruples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    chunks, have = [], 0
    while have < n_quadruples:
        draw = rng.uniform(0.0, TWO_PI, size=(n_quadruples, 4))
        draw = draw[_separated(draw)]
        chunks.append(draw)
        have += len(draw)
    return np.vstack(chunks)[:n_quadruples]


def cr_distortion_scan(angle_map: AngleMap, n_quadruples: int = 20000, seed: int = 0) -> EnvelopeReport:
    """
    Empirical envelope η̂(t) = max{cr_out : cr_in ≤ t} of the map's cross-ratio distortion.

    Args:
        angle_map: map to scan
        n_quadruples: random well-separated quadruples (≥ 1000); witnesses are added on top
        seed: seed for numpy's default_rng

    Returns:
        EnvelopeReport on 64 log-spaced bins over [1e-4, 1e4]
    """
    if n_quadruples < 1000:
        raise ParameterDomainError(f"cr_distortion_scan needs n_quadruples >= 1000, got {n_quadruples}")
    quads = np.vstack([sample_quadruples(n_quadruples, seed), witness_quadruples()])
    quads = quads[_separated(quads)]
    images = angle_map(quads)
    cr_in = cross_ratio(*quads.T)
    cr_out = cross_ratio(*images.T)
    # (a, c, b, d) has the reciprocal cross ratio
    cr_in = np.concatenate([cr_in, 1.0 / cr_in])
    cr_out = np.concatenate([cr_out, 1.0 / cr_out])

    t = ENVELOPE_EDGES[1:]
    support, _ = np.histogram(cr_in, bins=ENVELOPE_EDGES)
    ratio = cr_out / cr_in
    report = EnvelopeReport(
        t=t,
        eta_hat=np.zeros_like(t),
        support_count=support,
        gaps=support == 0,
        alpha_hat=float(np.max(np.maximum(ratio, 1.0 / ratio))),
        max_deviation=float(np.max(np.abs(cr_out - cr_in))),
        max_relative_deviation=float(np.max(np.abs(cr_out - cr_in) / np.maximum(1.0, cr_in))),
        min_reciprocal_product=float("nan"),
        n_samples=int(len(quads)),
        seed=int(seed),
        cr_in=cr_in,
        cr_out=cr_out,
    )
    eta_hat = report.eta_hat_at(t)
    populated = support > 0
    products = eta_hat * report.eta_hat_at(1.0 / t)
    # 1/t_i is the upper edge of bin 62 - i; the last edge has no bin below 1/t
    partner = np.append(populated[::-1][1:], False)
    products = products[populated & partner & np.isfinite(products)]
    if np.any(report.gaps):
        logger.warning("Envelope of %s has %d empty bins", angle_map.describe(), int(np.count_nonzero(report.gaps)))
    object.__setattr__(report, "eta_hat", eta_hat)
    object.__setattr__(report, "min_reciprocal_product", float(products.min()) if products.size else float("nan"))
    return report


# ----------------------------
# Bound versus energy
# ----------------------------
@dataclass(frozen=True)
class BoundComparison:
    energy: EnergyEstimate
    linear_bound: float
    envelope_bound: Optional[float]
    envelope_note: Optional[str]
    alpha_hat: float
    tolerance: float
    sampling_tolerance: float = 0.0

    @property
    def linear_violation(self) -> bool:
        return self.energy.value > self.linear_bound + self.tolerance

    @property
    def envelope_violation(self) -> bool:
        return (
            self.envelope_bound is not None
            and self.energy.value > self.envelope_bound + self.tolerance + self.sampling_tolerance
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "energy": self.energy.to_dict(),
            "alpha_hat": self.alpha_hat,
            "linear_bound": self.linear_bound,
            "envelope_bound": self.envelope_bound,
            "envelope_note": self.envelope_note,
            "gap": self.linear_bound - self.energy.value,
            "tolerance": self.tolerance,
            "sampling_tolerance": self.sampling_tolerance,
            "linear_violation": self.linear_violation,
            "envelope_violation": self.envelope_violation,
        }


def bound_vs_energy(angle_map: AngleMap, q: Optional[QuadratureSpec], scan: EnvelopeReport) -> BoundComparison:
    """
    Compare E(map) with 1 + log(α̂)/π and with the bound of the empirical envelope.

    η̂ at a bin edge only sees samples below the edge, so it sits under the
    true gauge by up to one bin. The envelope check allows for that with the
    gap between the bounds of η̂(ρt) and η̂(t) as a sampling tolerance.
    """
    energy = conformal_energy(angle_map, q)
    linear = qm_energy_bound(linear_gauge(max(scan.alpha_hat, 1.0)))
    envelope, note, sampling = None, None, 0.0
    try:
        lower = qm_energy_bound(scan.gauge())
        upper = qm_energy_bound(scan.upper_gauge())
        envelope, sampling = lower, max(upper - lower, 0.0)
    except (NonIntegrableGaugeError, ParameterDomainError) as exc:
        note = exc.message
        logger.warning("Envelope bound unavailable for %s: %s", angle_map.describe(), exc.message)
    return BoundComparison(
        energy=energy,
        linear_bound=linear,
        envelope_bound=envelope,
        envelope_note=note,
        alpha_hat=scan.alpha_hat,
        tolerance=energy.err + 1e-6,
        sampling_tolerance=sampling,
    )
