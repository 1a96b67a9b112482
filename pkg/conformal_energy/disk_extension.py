"""
Harmonic extension of boundary maps into the unit disk.

The boundary values e^{iθ(s)} are expanded as Σ c_k e^{iks}; the harmonic
extension is H(w) = Σ_{k≥0} c_k w^k + Σ_{k>0} c_{−k} w̄^k and its Dirichlet
(Douglas) energy is Σ |k||c_k|².
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import settings
from conformal_energy.circle_maps import TWO_PI, AngleMap
from conformal_energy.errors import NonConvergentError, ParameterDomainError
from conformal_energy.quadrature import gauss_nodes

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FourierBoundary:
    """Coefficients c_k for k = −M..M, stored at index k + M."""

    coefficients: np.ndarray
    M: int
    sampling: int
    tail_energy: float
    previous_octave_energy: float
    aliasing_advisory: bool
    label: str = ""

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    def coefficient(self, k: int) -> complex:
        if abs(k) > self.M:
            return 0j
        return complex(self.coefficients[k + self.M])

    def positive(self) -> np.ndarray:
        """c_1, ..., c_M."""
        return self.coefficients[self.M + 1:]

    def negative(self) -> np.ndarray:
        """c_{−1}, ..., c_{−M}."""
        return self.coefficients[: self.M][::-1]

    @property
    def parseval_sum(self) -> float:
        return math.fsum((np.abs(self.coefficients) ** 2).tolist())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"k": self.ks, "re": self.coefficients.real, "im": self.coefficients.imag})


def _octave_energy(c: np.ndarray, ks: np.ndarray, lo: int, hi: int) -> float:
    mask = (np.abs(ks) > lo) & (np.abs(ks) <= hi)
    return math.fsum((np.abs(ks[mask]) * np.abs(c[mask]) ** 2).tolist())


def boundary_fourier(angle_map: AngleMap, M: int = settings.DEFAULT_TRUNCATION_M, sampling_factor: int = settings.DEFAULT_SAMPLING_FACTOR) -> FourierBoundary:
    """
    Fourier coefficients of s ↦ e^{iθ(s)} by FFT on sampling_factor·M points.

    The Douglas mass of the last octave M/2 < |k| ≤ M is kept as the tail
    estimate; when it is not smaller than the octave below, an increase-M
    advisory is raised on the result and logged.
    """
    if M < 16:
        raise ParameterDomainError(f"Truncation M must be >= 16, got {M}", {"M": M})
    if sampling_factor < 8:
        raise ParameterDomainError(f"Sampling needs at least 8M points, got factor {sampling_factor}")
    N = sampling_factor * M
    s = TWO_PI * np.arange(N) / N
    spectrum = np.fft.fft(np.exp(1j * angle_map(s))) / N
    ks = np.arange(-M, M + 1)
    coefficients = spectrum[np.mod(ks, N)]
    tail = _octave_energy(coefficients, ks, M // 2, M)
    previous = _octave_energy(coefficients, ks, M // 4, M // 2)
    advisory = bool(tail > 1e-12 and tail >= 0.9 * previous)
    if advisory:
        logger.warning(
            "Fourier tail of %s is not decaying (last octave %.3e, previous %.3e); increase M",
            angle_map.describe(), tail, previous,
        )
    return FourierBoundary(
        coefficients=coefficients,
        M=M,
        sampling=N,
        tail_energy=tail,
        previous_octave_energy=previous,
        aliasing_advisory=advisory,
        label=angle_map.describe(),
    )


def douglas_energy(fb: FourierBoundary) -> float:
    """Σ_k |k| |c_k|², i.e. (1/π)∫_D (|H_w|² + |H_w̄|²) of the harmonic extension."""
    if fb.tail_energy > 1e-12 and fb.tail_energy > fb.previous_octave_energy:
        raise NonConvergentError(
            f"Douglas sum of {fb.label} is not converging at M={fb.M}; the energy may be infinite",
            {"tail_energy": fb.tail_energy, "previous_octave_energy": fb.previous_octave_energy},
        )
    return math.fsum((np.abs(fb.ks) * np.abs(fb.coefficients) ** 2).tolist())


def extension_energy(angle_map: AngleMap, M: int = settings.DEFAULT_TRUNCATION_M, sampling_factor: int = settings.DEFAULT_SAMPLING_FACTOR) -> float:
    """Douglas energy of the inverse boundary map, which equals E(map) for the extremal extension."""
    return douglas_energy(boundary_fourier(angle_map.inverse(), M, sampling_factor))


# ----------------------------
# Poisson field
# ----------------------------
@dataclass(frozen=True)
class DiskField:
    r: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    H: np.ndarray
    H_w: np.ndarray
    H_wbar: np.ndarray
    J: np.ndarray
    nu: np.ndarray
    invalid: np.ndarray
    hw_zero: np.ndarray
    douglas: float

    @property
    def a(self) -> np.ndarray:
        return np.abs(self.H_w) ** 2

    @property
    def b(self) -> np.ndarray:
        return np.abs(self.H_wbar) ** 2

    def holomorphy_residual(self, r_max: float = 0.9) -> float:
        """
        max|∂ν/∂w̄| / max|∂ν/∂w| on r ≤ r_max with ∂/∂w̄ = (e^{iφ}/2)(∂_r + (i/r)∂_φ).

        Radial derivatives use second-order differences on the Gauss nodes,
        angular ones periodic central differences.
        """
        keep = self.r <= r_max
        if np.count_nonzero(keep) < 3:
            raise ParameterDomainError("Too few radial nodes inside r_max for the holomorphy check")
        r = self.r[keep]
        nu = self.nu[keep]
        d_r = np.gradient(nu, r, axis=0, edge_order=2)
        step = self.phi[1] - self.phi[0]
        d_phi = (np.roll(nu, -1, axis=1) - np.roll(nu, 1, axis=1)) / (2.0 * step)
        rotation = np.exp(1j * self.phi)[None, :]
        d_wbar = 0.5 * rotation * (d_r + 1j * d_phi / r[:, None])
        d_w = 0.5 * np.conj(rotation) * (d_r - 1j * d_phi / r[:, None])
        scale = max(float(np.max(np.abs(d_w))), 1e-12)
        return float(np.max(np.abs(d_wbar))) / scale

    def summary(self) -> Dict[str, Any]:
        return {
            "radial": int(self.r.size),
            "angular": int(self.phi.size),
            "max_abs_nu": float(np.max(np.abs(self.nu))),
            "min_jacobian": float(np.min(self.J)),
            "invalid_points": int(np.count_nonzero(self.invalid)),
            "hw_zero_points": int(np.count_nonzero(self.hw_zero)),
            "douglas": self.douglas,
        }


def _synthesize(coefficients: np.ndarray, r: np.ndarray, n_phi: int, sign: int) -> np.ndarray:
    """
    Σ_m coefficients[m] r^m e^{±imφ} on the radial nodes and the n_phi angular midpoints.

    Each row is one FFT: the half-cell shift of the midpoints goes into the
    coefficients and modes beyond n_phi are folded onto their aliases, so the
    values are exact point evaluations for any n_phi.
    """
    m = np.arange(coefficients.size)
    shifted = coefficients * np.exp(sign * 1j * np.pi * m / n_phi)
    with np.errstate(under="ignore"):
        radial = np.power.outer(r, m) * shifted[None, :]
    folded = np.zeros((r.size, n_phi), dtype=complex)
    for start in range(0, m.size, n_phi):
        block = radial[:, start:start + n_phi]
        folded[:, :block.shape[1]] += block
    if sign > 0:
        return np.fft.ifft(folded, axis=1) * n_phi
    return np.fft.fft(folded, axis=1)


def poisson_field(fb: FourierBoundary, grid: Optional[Tuple[int, int]] = None) -> DiskField:
    """
    Harmonic extension of the boundary data on a polar grid.

    Radial nodes are Gauss–Legendre on (0, 1) and angular nodes are cell
    midpoints. With radial count ≥ M and angular count ≥ M the grid sums of
    J and |H_w|² + |H_w̄|² reproduce the truncated series exactly.

    Args:
        fb: boundary Fourier coefficients
        grid: (radial count, angular count); defaults to (M, max(M, settings.DEFAULT_GRID_ANGULAR))

    Returns:
        DiskField with H, its Wirtinger derivatives, J = |H_w|² − |H_w̄|² and ν = conj(H_w̄)/H_w
    """
    n_r, n_phi = grid or (fb.M, max(fb.M, settings.DEFAULT_GRID_ANGULAR))
    if n_r < 2 or n_phi < 4:
        raise ParameterDomainError(f"Grid too small: {(n_r, n_phi)}")
    if n_phi < fb.M or n_r < fb.M:
        logger.warning("Grid %s under-resolves M=%d; grid integrals are no longer exact", (n_r, n_phi), fb.M)
    r, r_weights = gauss_nodes(0.0, 1.0, order=n_r)
    phi = (np.arange(n_phi) + 0.5) * TWO_PI / n_phi
    weights = (r * r_weights)[:, None] * np.full(n_phi, TWO_PI / n_phi)[None, :]

    positive = fb.positive()
    negative = fb.negative()
    m = np.arange(1, fb.M + 1)
    H = fb.coefficient(0) + _synthesize(np.concatenate([[0j], positive]), r, n_phi, 1) \
        + _synthesize(np.concatenate([[0j], negative]), r, n_phi, -1)
    H_w = _synthesize(m * positive, r, n_phi, 1)
    H_wbar = _synthesize(m * negative, r, n_phi, -1)

    a = np.abs(H_w) ** 2
    b = np.abs(H_wbar) ** 2
    J = a - b
    hw_zero = a <= 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = np.where(hw_zero, 0j, np.conj(H_wbar) / H_w)
    invalid = (J <= 0.0) | (np.abs(nu) >= 1.0) | hw_zero
    if np.any(invalid):
        logger.warning("%d grid points are not orientation preserving for %s", int(np.count_nonzero(invalid)), fb.label)
    if np.any(hw_zero):
        logger.warning("H_w vanishes at %d grid points; ν set to 0 there", int(np.count_nonzero(hw_zero)))
    douglas = math.fsum(((a + b) * weights).ravel().tolist()) / np.pi
    return DiskField(
        r=r, phi=phi, weights=weights, H=H, H_w=H_w, H_wbar=H_wbar,
        J=J, nu=nu, invalid=invalid, hw_zero=hw_zero, douglas=douglas,
    )


# ----------------------------
# Deformation curve
# ----------------------------
@dataclass(frozen=True)
class DeformationCurve:
    """
    B(t) on the retained part of the t grid.

    t_limit is where t²|ν|² first reaches 1 on the grid, or 1 when it never does.
    """

    t: np.ndarray
    values: np.ndarray
    b0: float
    b_limit: float
    invalid_points: int
    strictly_increasing: bool
    limit_identity_error: float
    truncated: bool = False
    t_limit: float = 1.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.t, "B": self.values})

    def summary(self) -> Dict[str, Any]:
        return {
            "B0": self.b0,
            "B_limit": self.b_limit,
            "strictly_increasing": self.strictly_increasing,
            "invalid_points": self.invalid_points,
            "limit_identity_error": self.limit_identity_error,
            "truncated": self.truncated,
            "t_limit": self.t_limit,
            "points": int(self.t.size),
        }


def deformation_limit(field: DiskField) -> float:
    """Smallest t at which t²|ν|² reaches 1 on the grid, capped at 1."""
    a, b = field.a, field.b
    if np.any((a <= 0.0) & (b > 0.0)):
        return 0.0
    ratio = np.divide(a, b, out=np.full_like(a, np.inf), where=b > 0.0)
    return float(min(1.0, math.sqrt(float(np.min(ratio)))))


def _check_parameter(field: DiskField, t: float) -> None:
    if t < 0.0:
        raise ParameterDomainError(f"Deformation parameter must be >= 0, got {t}")
    if t == 0.0:
        return
    limit = deformation_limit(field)
    if t >= limit:
        raise ParameterDomainError(
            f"t²|ν|² reaches 1 on the grid at t = {limit:.6g}; B({t}) is undefined",
            {"t": t, "limit": limit},
        )


def _curve_integrand(field: DiskField, t: float) -> np.ndarray:
    """(1 + t²|ν|²)/(1 − t²|ν|²)·J written as (a + t²b)/(a − t²b)·(a − b)."""
    if t == 0.0:
        return field.J
    a, b = field.a, field.b
    t2 = t * t
    return (a + t2 * b) / (a - t2 * b) * (a - b)


def deformation_value(field: DiskField, t: float) -> float:
    _check_parameter(field, t)
    return math.fsum((_curve_integrand(field, t) * field.weights).ravel().tolist()) / np.pi


def deformation_derivative(field: DiskField, t: float) -> float:
    """dB/dt = (1/π) Σ 4t|ν|²/(1 − t²|ν|²)² · J · area."""
    _check_parameter(field, t)
    if t == 0.0:
        return 0.0
    a, b = field.a, field.b
    integrand = 4.0 * t * a * b * (a - b) / (a - t * t * b) ** 2
    return math.fsum((integrand * field.weights).ravel().tolist()) / np.pi


def deformation_bound_curve(field: DiskField, t_grid: Optional[Sequence[float]] = None) -> DeformationCurve:
    """
    B(t) = (1/π) ∫ (1 + t²|ν|²)/(1 − t²|ν|²) J dw on the w grid.

    B(0) is the area of the image disk over π. The t → 1 integrand is
    |H_w|² + |H_w̄|² pointwise, so the limit is the Douglas energy. When some
    grid point has |ν| ≥ 1, the t values from 1/max|ν| on are dropped and the
    curve is flagged as truncated.
    """
    t = np.linspace(0.0, 0.99, 32) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any((t < 0.0) | (t >= 1.0)):
        raise ParameterDomainError("Deformation parameters must lie in [0, 1)")
    limit_t = deformation_limit(field)
    keep = (t == 0.0) | (t < limit_t)
    truncated = bool(np.any(~keep))
    if truncated:
        logger.warning(
            "t²|ν|² reaches 1 at t=%.6g for %d non orientation preserving points; curve truncated to %d of %d values",
            limit_t, int(np.count_nonzero(field.invalid)), int(np.count_nonzero(keep)), t.size,
        )
    t = t[keep]
    values = np.array([deformation_value(field, float(v)) for v in t])

    a, b = field.a, field.b
    target = a + b
    differs = a != b
    with np.errstate(divide="ignore", invalid="ignore"):
        closed_form = np.where(differs, (a + b) / np.where(differs, a - b, 1.0) * (a - b), target)
    mismatch = np.abs(closed_form - target) / np.maximum(target, 1e-300)
    return DeformationCurve(
        t=t,
        values=values,
        b0=deformation_value(field, 0.0),
        b_limit=field.douglas,
        invalid_points=int(np.count_nonzero(field.invalid)),
        strictly_increasing=bool(values.size >= 2 and np.all(np.diff(values) > 0.0)),
        limit_identity_error=float(np.max(mismatch)) if mismatch.size else 0.0,
        truncated=truncated,
        t_limit=limit_t,
    )
