"""
Circle homeomorphisms represented by their lifted angle functions.

A map g of the unit circle is stored as the increasing function θ with
g(e^{it}) = e^{iθ(t)} and θ(t + 2π) = θ(t) + 2π.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from conformal_energy.errors import MapValidationError, ParameterDomainError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
INVERSION_TOL = 1e-12
HOELDER_EXPONENTS = (1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0)
HOELDER_STABILITY = 0.9
SINGULAR_INCREMENT_RATIO = 0.75

ArrayLike = Union[float, Sequence[float], np.ndarray]


# ----------------------------
# Base class
# ----------------------------
class AngleMap(ABC):
    """Lifted angle function of a circle homeomorphism."""

    kind = "abstract"

    def __init__(self, label: Optional[str] = None):
        self._label = label

    @abstractmethod
    def _base(self, t: np.ndarray) -> np.ndarray:
        """θ on [0, 2π]."""

    @abstractmethod
    def _base_derivative(self, t: np.ndarray) -> np.ndarray:
        """θ' on [0, 2π]."""

    @abstractmethod
    def _describe(self) -> str:
        pass

    def _reduce(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        turns = np.floor(t / TWO_PI)
        return t - TWO_PI * turns, turns

    def __call__(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        r, turns = self._reduce(t)
        return self._base(r) + TWO_PI * turns

    def derivative(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        r, _ = self._reduce(t)
        return self._base_derivative(r)

    def boundary(self, t: ArrayLike) -> np.ndarray:
        """The circle map itself, e^{iθ(t)}."""
        return np.exp(1j * self(t))

    @property
    def offset(self) -> float:
        return float(self(0.0))

    @property
    def pinned(self) -> bool:
        return abs(self.offset) <= 1e-12

    def inverse(self) -> "AngleMap":
        return InverseMap(self)

    def compose(self, inner: "AngleMap") -> "AngleMap":
        """self ∘ inner."""
        return ComposedMap(self, inner)

    def describe(self) -> str:
        return self._label if self._label is not None else self._describe()

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.describe()}>"


# ----------------------------
# Closed-form families
# ----------------------------
class IdentityMap(AngleMap):
    kind = "identity"

    def _base(self, t):
        return np.array(t, dtype=float)

    def _base_derivative(self, t):
        return np.ones_like(t, dtype=float)

    def __call__(self, t):
        return np.array(t, dtype=float)

    def inverse(self):
        return self

    def _describe(self):
        return "identity"


class MoebiusMap(AngleMap):
    """
    Boundary values of w ↦ e^{i·rot}(w − a)/(1 − ā w).

    Since Re(1 − a e^{−it}) > 0, θ(t) = rot + t + 2 Arg(1 − a e^{−it}) is the
    continuous lift for every real t, so no reduction or unwrapping is needed.
    """

    kind = "moebius"

    def __init__(self, a: complex = 0.0, rot: float = 0.0, label: Optional[str] = None):
        super().__init__(label)
        a = complex(a)
        if not np.isfinite(a.real) or not np.isfinite(a.imag) or abs(a) >= 1.0:
            raise ParameterDomainError(
                f"Möbius parameter must satisfy |a| < 1, got |a| = {abs(a):.6g}",
                {"a": [a.real, a.imag]},
            )
        self.a = a
        self.rot = float(rot)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.rot + t + 2.0 * np.angle(1.0 - self.a * np.exp(-1j * t))

    def _base(self, t):
        return self(t)

    def _base_derivative(self, t):
        return (1.0 - abs(self.a) ** 2) / np.abs(np.exp(1j * t) - self.a) ** 2

    def derivative(self, t):
        return self._base_derivative(np.asarray(t, dtype=float))

    def inverse(self):
        return MoebiusMap(-self.a * np.exp(1j * self.rot), -self.rot)

    def _describe(self):
        return f"mobius:a={self.a.real!r}{self.a.imag:+}i,rot={self.rot!r}"


class PiecewiseLinearMap(AngleMap):
    """Monotone piecewise-linear lift through the given knots."""

    kind = "tabulated"

    def __init__(self, knots_t: Sequence[float], knots_theta: Sequence[float], label: Optional[str] = None):
        super().__init__(label)
        knots_t = np.asarray(knots_t, dtype=float)
        knots_theta = np.asarray(knots_theta, dtype=float)
        if knots_t.ndim != 1 or knots_t.shape != knots_theta.shape or knots_t.size < 2:
            raise MapValidationError("Tabulated map needs two equal-length columns with at least two rows")
        for name, column in (("t", knots_t), ("theta", knots_theta)):
            bad = np.flatnonzero(np.diff(column) <= 0.0) + 1
            if bad.size:
                raise MapValidationError(
                    f"Tabulated map column {name} is not strictly increasing",
                    {"column": name, "offending_indices": bad[:50].tolist()},
                )
        for column in (knots_t, knots_theta):
            if abs(column[0]) > 1e-9 or abs(column[-1] - TWO_PI) > 1e-9:
                raise MapValidationError(
                    "Tabulated map must start at (0, 0) and end at (2π, 2π)",
                    {"first": [float(knots_t[0]), float(knots_theta[0])],
                     "last": [float(knots_t[-1]), float(knots_theta[-1])]},
                )
            column[0], column[-1] = 0.0, TWO_PI
        self.knots_t = knots_t
        self.knots_theta = knots_theta
        self._slopes = np.diff(knots_theta) / np.diff(knots_t)

    def _segment(self, t):
        idx = np.searchsorted(self.knots_t, t, side="right") - 1
        return np.clip(idx, 0, self._slopes.size - 1)

    def _base(self, t):
        return np.interp(t, self.knots_t, self.knots_theta)

    def _base_derivative(self, t):
        return self._slopes[self._segment(t)]

    def inverse(self):
        return PiecewiseLinearMap(self.knots_theta, self.knots_t, label=f"inv({self.describe()})")

    def _describe(self):
        return "table:<inline>"


class TabulatedMap(PiecewiseLinearMap):
    """Strictly increasing samples on a uniform grid of [0, 2π]."""

    def __init__(self, values: Sequence[float], label: Optional[str] = None):
        values = np.asarray(values, dtype=float)
        super().__init__(np.linspace(0.0, TWO_PI, values.size), values, label=label)

    @staticmethod
    def from_csv(path: Union[str, Path]) -> PiecewiseLinearMap:
        """Read a two-column CSV of (t, θ(t)) in radians; a header row is optional."""
        frame = pd.read_csv(path, header=None, comment="#")
        frame = frame.apply(pd.to_numeric, errors="coerce").dropna()
        if frame.shape[1] != 2:
            raise MapValidationError(f"Table {path} must have exactly two columns, found {frame.shape[1]}")
        return PiecewiseLinearMap(frame.iloc[:, 0].to_numpy(), frame.iloc[:, 1].to_numpy(), label=f"table:{path}")


class PwlMap(PiecewiseLinearMap):
    """
    θ(t) = t/λ on [0, λ] and 1 + (2π − 1)(t − λ)/(2π − λ) on [λ, 2π].

    The second branch is the continuous affine one through (λ, 1) and (2π, 2π).
    """

    kind = "pwl"

    def __init__(self, lam: float):
        lam = float(lam)
        if not (0.0 < lam <= 1.0):
            raise ParameterDomainError(f"pwl parameter λ must lie in (0, 1], got {lam!r}", {"lambda": lam})
        self.lam = lam
        super().__init__([0.0, lam, TWO_PI], [0.0, 1.0, TWO_PI])

    def _describe(self):
        return f"pwl:lambda={self.lam!r}"


class SquareMap(AngleMap):
    """θ(t) = t² on [0, 1], t on [1, 2π]."""

    kind = "square"

    def _base(self, t):
        return np.where(t <= 1.0, t * t, t)

    def _base_derivative(self, t):
        return np.where(t <= 1.0, 2.0 * t, 1.0)

    def inverse(self):
        return SquareRootMap()

    def _describe(self):
        return "square"


class SquareRootMap(AngleMap):
    kind = "square-inverse"

    def _base(self, t):
        return np.where(t <= 1.0, np.sqrt(np.maximum(t, 0.0)), t)

    def _base_derivative(self, t):
        with np.errstate(divide="ignore"):
            return np.where(t <= 1.0, 0.5 / np.sqrt(np.maximum(t, 0.0)), 1.0)

    def inverse(self):
        return SquareMap()

    def _describe(self):
        return "inv(square)"


class FourierMap(AngleMap):
    """base(t) + Σ_k c_k sin(kt), k = 1..K."""

    kind = "fourier"

    def __init__(self, base: AngleMap, coefficients: Sequence[float], label: Optional[str] = None):
        super().__init__(label)
        self.base = base
        self.coefficients = np.asarray(coefficients, dtype=float).copy()
        self._k = np.arange(1, self.coefficients.size + 1, dtype=float)

    def _modes(self, t):
        return np.sin(np.multiply.outer(t, self._k)) @ self.coefficients

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.base(t) + self._modes(t)

    def _base(self, t):
        return self(t)

    def _base_derivative(self, t):
        return self.derivative(t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return self.base.derivative(t) + np.cos(np.multiply.outer(t, self._k)) @ (self._k * self.coefficients)

    def _describe(self):
        terms = ",".join(f"c{int(k)}={float(c)!r}" for k, c in zip(self._k, self.coefficients) if c != 0.0)
        if isinstance(self.base, IdentityMap):
            return f"fourier:{terms}" if terms else "identity"
        return f"{self.base.describe()}+fourier[{terms}]"


# ----------------------------
# Wrappers
# ----------------------------
class InverseMap(AngleMap):
    """θ⁻¹ by vectorized bisection on the lift."""

    kind = "inverse"

    def __init__(self, forward: AngleMap):
        super().__init__()
        self.forward = forward
        self._start = forward.offset
        self._iterations = int(np.ceil(np.log2(TWO_PI / INVERSION_TOL))) + 2

    def _solve(self, target):
        lo = np.zeros_like(target)
        hi = np.full_like(target, TWO_PI)
        for _ in range(self._iterations):
            mid = 0.5 * (lo + hi)
            below = self.forward(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        turns = np.floor((s - self._start) / TWO_PI)
        return self._solve(s - TWO_PI * turns) + TWO_PI * turns

    def _base(self, s):
        return self(s)

    def _base_derivative(self, s):
        return self.derivative(s)

    def derivative(self, s):
        return 1.0 / self.forward.derivative(self(s))

    def inverse(self):
        return self.forward

    def _describe(self):
        return f"inv({self.forward.describe()})"


class ComposedMap(AngleMap):
    """outer ∘ inner."""

    kind = "compose"

    def __init__(self, outer: AngleMap, inner: AngleMap):
        super().__init__()
        self.outer = outer
        self.inner = inner

    def __call__(self, t):
        return self.outer(self.inner(t))

    def _base(self, t):
        return self(t)

    def _base_derivative(self, t):
        return self.derivative(t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return self.outer.derivative(self.inner(t)) * self.inner.derivative(t)

    def inverse(self):
        return ComposedMap(self.inner.inverse(), self.outer.inverse())

    def _describe(self):
        return f"comp({self.outer.describe()},{self.inner.describe()})"


# ----------------------------
# Constructors (public operations)
# ----------------------------
def identity() -> AngleMap:
    return IdentityMap()


def make_moebius(a: complex, rot: float = 0.0) -> MoebiusMap:
    return MoebiusMap(a, rot)


def rotation(angle: float) -> MoebiusMap:
    return MoebiusMap(0.0, angle)


def make_pwl(lam: float) -> PwlMap:
    return PwlMap(lam)


def make_square() -> SquareMap:
    return SquareMap()


def invert(angle_map: AngleMap) -> AngleMap:
    return angle_map.inverse()


def compose(outer: AngleMap, inner: AngleMap) -> AngleMap:
    return outer.compose(inner)


def eval_angle(angle_map: AngleMap, t: ArrayLike) -> np.ndarray:
    return angle_map(t)


def moebius_arctan_oracle(a: float, t: ArrayLike) -> np.ndarray:
    """The closed arctan form of a real-a Möbius lift, valid on (0, π)."""
    t = np.asarray(t, dtype=float)
    denominator = (1.0 + a * a) * np.cos(t) - 2.0 * a
    theta = np.arctan((1.0 - a * a) * np.sin(t) / denominator)
    return np.where(denominator < 0.0, theta + np.pi, theta)


# ----------------------------
# Diagnostics
# ----------------------------
@dataclass(frozen=True)
class MapDiagnostics:
    n_samples: int
    min_slope_estimate: float
    hoelder_p: float
    hoelder_alpha: float
    monotone_ok: bool
    endpoint_ok: bool
    singular_integral_ok: Optional[bool] = None
    offending_indices: List[int] = field(default_factory=list)
    pinned_at_one: bool = True

    @property
    def hoelder_lower(self) -> Tuple[float, float]:
        return self.hoelder_p, self.hoelder_alpha

    @property
    def regular(self) -> bool:
        """Whether the first-variation integrals converge for this map."""
        return self.monotone_ok and (self.hoelder_p < 2.0 or bool(self.singular_integral_ok))

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "min_slope_estimate": self.min_slope_estimate,
            "hoelder_p": self.hoelder_p,
            "hoelder_alpha": self.hoelder_alpha,
            "monotone_ok": self.monotone_ok,
            "endpoint_ok": self.endpoint_ok,
            "singular_integral_ok": self.singular_integral_ok,
            "offending_indices": list(self.offending_indices),
            "pinned_at_one": self.pinned_at_one,
        }


def _pairwise_log_ratio_minima(t: np.ndarray, theta: np.ndarray, exponents: np.ndarray, block: int = 128):
    """Min over i<j of log Δθ − p log Δt for every p, on the full and the even subgrid."""
    n = t.size
    fine = np.full(exponents.size, np.inf)
    coarse = np.full(exponents.size, np.inf)
    even = (np.arange(n) % 2) == 0
    for i0 in range(0, n - 1, block):
        rows = slice(i0, min(i0 + block, n - 1))
        idx = np.arange(rows.start, rows.stop)
        upper = np.arange(n)[None, :] > idx[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            log_dt = np.log(np.where(upper, t[None, :] - t[idx, None], 1.0))
            log_dth = np.log(np.where(upper, theta[None, :] - theta[idx, None], 1.0))
        even_pairs = upper & even[idx, None] & even[None, :]
        for k, p in enumerate(exponents):
            values = log_dth - p * log_dt
            fine[k] = min(fine[k], np.min(np.where(upper, values, np.inf)))
            if even_pairs.any():
                coarse[k] = min(coarse[k], np.min(np.where(even_pairs, values, np.inf)))
    return fine, coarse


def _fit_hoelder(t: np.ndarray, theta: np.ndarray) -> Tuple[float, float]:
    exponents = np.asarray(HOELDER_EXPONENTS)
    fine, coarse = _pairwise_log_ratio_minima(t, theta, exponents)
    for p, lf, lc in zip(exponents, fine, coarse):
        if np.isfinite(lf) and lf >= lc + np.log(HOELDER_STABILITY):
            return float(p), float(np.exp(lf) * (1.0 - 1e-12))
    return float("inf"), 0.0


def _singular_integral(angle_map: AngleMap, n: int) -> float:
    h = TWO_PI / n
    x = (np.arange(n) + 0.5) * h
    theta = angle_map(x)
    dx = np.abs(x[:, None] - x[None, :])
    dth = np.abs(theta[:, None] - theta[None, :])
    np.fill_diagonal(dth, 1.0)
    ratio = dx / dth
    np.fill_diagonal(ratio, 0.0)
    return float(ratio.sum() * h * h)


def singular_integral_converges(angle_map: AngleMap, levels: Sequence[int] = (256, 512, 1024)) -> bool:
    """Refinement test for ∬ |x − y| / |θ(x) − θ(y)| < ∞."""
    values = [_singular_integral(angle_map, n) for n in levels]
    d1, d2 = values[1] - values[0], values[2] - values[1]
    logger.debug("Singular integral levels %s -> %s", list(levels), values)
    return abs(d2) <= SINGULAR_INCREMENT_RATIO * abs(d1) or abs(d2) <= 1e-6 * abs(values[-1])


def validate(angle_map: AngleMap, n_samples: int = 1024, strict: bool = True) -> MapDiagnostics:
    """
    Sample the lift on a uniform grid and report monotonicity, closure and a
    Hölder-type lower bound |θ(x) − θ(y)| ≥ α|x − y|^p.

    Args:
        angle_map: map to check
        n_samples: grid cells on [0, 2π] (≥ 16)
        strict: raise MapValidationError on non-monotone samples instead of reporting

    Returns:
        MapDiagnostics
    """
    if n_samples < 16:
        raise ParameterDomainError(f"validate needs n_samples >= 16, got {n_samples}")
    t = np.linspace(0.0, TWO_PI, n_samples + 1)
    theta = angle_map(t)
    dth = np.diff(theta)
    bad = np.flatnonzero(~(dth > 0.0))
    endpoint_ok = bool(abs(theta[-1] - theta[0] - TWO_PI) <= 1e-9)
    # θ(0) ≡ 0 mod 2π; Möbius maps that move 1 are valid but not pinned
    wrapped = float(np.remainder(theta[0] + np.pi, TWO_PI) - np.pi)
    pinned = bool(abs(wrapped) <= 1e-9)
    if bad.size:
        if strict:
            raise MapValidationError(
                f"Map {angle_map.describe()} is not strictly increasing",
                {"offending_indices": bad[:50].tolist()},
            )
        return MapDiagnostics(
            n_samples, float(np.min(dth / np.diff(t))), float("inf"), 0.0,
            False, endpoint_ok, None, bad[:50].tolist(), pinned,
        )
    min_slope = float(np.min(dth / np.diff(t)))
    p, alpha = _fit_hoelder(t, theta)
    singular_ok = True if p < 2.0 else singular_integral_converges(angle_map)
    if p >= 2.0:
        logger.warning("Map %s has Hölder exponent p=%s; singular integral converges: %s", angle_map.describe(), p, singular_ok)
    return MapDiagnostics(
        n_samples, min_slope, p, alpha, True, endpoint_ok, singular_ok, pinned_at_one=pinned,
    )


def chordal_bilipschitz_constant(angle_map: AngleMap, n: int = 1024, block: int = 256) -> Tuple[float, float, float]:
    """
    Sampled chordal distortion of the map.

    Returns:
        (L, min ratio, max ratio) over pairs of n equally spaced points, where
        ratio = |g(ζ) − g(η)| / |ζ − η| and L = max(max ratio, 1 / min ratio).
    """
    t = TWO_PI * np.arange(n) / n
    theta = angle_map(t)
    lowest, highest = np.inf, 0.0
    for i0 in range(0, n, block):
        idx = np.arange(i0, min(i0 + block, n))
        off = np.arange(n)[None, :] != idx[:, None]
        chord_in = np.abs(np.sin(0.5 * (t[idx, None] - t[None, :])))
        chord_out = np.abs(np.sin(0.5 * (theta[idx, None] - theta[None, :])))
        ratio = np.where(off, chord_out / np.where(off, chord_in, 1.0), np.nan)
        lowest = min(lowest, float(np.nanmin(ratio)))
        highest = max(highest, float(np.nanmax(ratio)))
    return max(highest, 1.0 / lowest), lowest, highest
