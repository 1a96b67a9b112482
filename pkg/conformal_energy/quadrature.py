"""
Shared quadrature plumbing: row tiling with a fixed-order reduction, Gauss
panels and geometrically graded panels for endpoint singularities.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from scipy.special import roots_legendre

from config import settings
from conformal_energy.errors import NonConvergentError

logger = logging.getLogger(__name__)

T = TypeVar("T")


# ----------------------------
# Tiles
# ----------------------------
def row_tiles(n: int, rows: Optional[int] = None) -> List[Tuple[int, int]]:
    """Partition range(n) into consecutive (start, stop) tiles; depends only on n and rows."""
    rows = rows or settings.TILE_ROWS
    return [(start, min(start + rows, n)) for start in range(0, n, rows)]


def map_tiles(fn: Callable[[int, int], T], n: int, workers: Optional[int] = None) -> List[T]:
    """Evaluate fn on every tile, returning results in tile order."""
    tiles = row_tiles(n)
    workers = workers or settings.WORKERS
    if workers <= 1 or len(tiles) == 1:
        return [fn(start, stop) for start, stop in tiles]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda tile: fn(*tile), tiles))


def parallel_map(fn: Callable[[float], T], items: Sequence[float], workers: Optional[int] = None) -> List[T]:
    workers = workers or settings.WORKERS
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def tiled_sum(fn: Callable[[int, int], np.ndarray], n: int, workers: Optional[int] = None) -> float:
    """Sum of per-row partial sums, reduced with math.fsum so the result is worker-independent."""
    partials = map_tiles(fn, n, workers)
    return math.fsum(np.concatenate([np.atleast_1d(p) for p in partials]).tolist())


def tiled_rows(fn: Callable[[int, int], np.ndarray], n: int, workers: Optional[int] = None) -> np.ndarray:
    return np.concatenate(map_tiles(fn, n, workers))


# ----------------------------
# Gauss panels
# ----------------------------
@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    nodes, weights = roots_legendre(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_nodes(a: float, b: float, order: int = 16, pieces: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss–Legendre nodes and weights on [a, b] split into equal pieces."""
    nodes, weights = gauss_legendre(order)
    edges = np.linspace(a, b, pieces + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def gauss_panel(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, order: int = 16, pieces: int = 1) -> float:
    x, w = gauss_nodes(a, b, order, pieces)
    return math.fsum((w * f(x)).tolist())


def graded_panels(
    f: Callable[[np.ndarray], np.ndarray],
    upper: float,
    order: int = 16,
    pieces: int = 1,
    tol: float = 1e-12,
    x_min: float = 0.0,
    max_panels: int = 200,
) -> Tuple[float, List[float]]:
    """
    Integrate f over (0, upper] on panels [upper·2^{-k-1}, upper·2^{-k}].

    Stops once a panel contributes less than tol in magnitude or the panel
    reaches x_min. The caller decides what non-decaying contributions mean.

    Returns:
        (integral, per-panel contributions in order of generation)
    """
    contributions: List[float] = []
    hi = upper
    for _ in range(max_panels):
        lo = 0.5 * hi
        contributions.append(gauss_panel(f, lo, hi, order, pieces))
        if abs(contributions[-1]) < tol or lo <= x_min:
            break
        hi = lo
    logger.debug("graded panels: %d panels down to %.3e", len(contributions), hi * 0.5)
    return math.fsum(contributions), contributions


def decaying(contributions: Sequence[float], window: int = 4, ratio: float = 0.9, floor: float = 1e-8) -> bool:
    """Whether the last `window` panel contributions shrink geometrically or sit below floor."""
    tail = np.abs(np.asarray(contributions[-(window + 1):], dtype=float))
    if tail.size < 2:
        return True
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = tail[1:] / tail[:-1]
    return bool(np.all(~np.isfinite(ratios) | (ratios < ratio) | (tail[1:] < floor)))


def even_singular_integral(
    f: Callable[[np.ndarray], np.ndarray],
    resolution: int,
    what: str,
    x_min: float = 1e-6,
) -> float:
    """
    2∫₀^π f(x) dx for an even integrand bounded (or mildly singular) at x = 0.

    Raises NonConvergentError when the panel sums toward 0 stop decaying.
    """
    pieces = max(2, resolution // 128)
    value, contributions = graded_panels(f, np.pi, order=16, pieces=pieces, tol=0.0, x_min=x_min)
    if not np.isfinite(value):
        raise NonConvergentError(f"{what}: integrand is not finite", {"panels": len(contributions)})
    if not decaying(contributions):
        raise NonConvergentError(
            f"{what}: panel sums toward x = 0 do not decay",
            {"last_contributions": [float(c) for c in contributions[-4:]]},
        )
    return 2.0 * value
