"""Composite Gauss-Legendre panel quadrature with doubling-based error control."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureError

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1], cached."""
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (x, w)
    return _GL_CACHE[n]


def panel_nodes(breaks: Sequence[float], order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on the panels defined by ``breaks``."""
    x, w = gauss_legendre(order)
    b = np.asarray(breaks, dtype=float)
    lo, hi = b[:-1], b[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def refine_breaks(breaks: np.ndarray) -> np.ndarray:
    """Halve every panel."""
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    out = np.empty(breaks.size + mids.size)
    out[0::2] = breaks
    out[1::2] = mids
    return out


def adaptive_panels(
    f: Callable[[np.ndarray], np.ndarray],
    breaks: Sequence[float],
    tol: float = 1e-12,
    order: int = 16,
    max_refine: int = 12,
    scale: float = 0.0,
) -> float | complex:
    """Integrate ``f`` over the panels, halving all panels until two successive
    composite rules agree to ``tol`` (absolute, against ``max(scale, |I|)``).

    ``f`` must accept a 1-D node array and return values of the same shape.
    Raises :class:`QuadratureError` if refinement stalls.
    """
    b = np.asarray(breaks, dtype=float)
    nodes, weights = panel_nodes(b, order)
    prev = np.sum(weights * f(nodes))
    for _ in range(max_refine):
        b = refine_breaks(b)
        nodes, weights = panel_nodes(b, order)
        cur = np.sum(weights * f(nodes))
        if abs(cur - prev) <= tol * max(scale, abs(cur), 1e-300):
            return cur
        prev = cur
    raise QuadratureError(
        f"panel refinement stalled: last change {abs(cur - prev):.3e} "
        f"above tolerance {tol:.1e} after {max_refine} halvings"
    )


def geometric_breaks(a: float, b: float, inner: float, ratio: float = 4.0) -> np.ndarray:
    """Panel breakpoints on [a, b] graded toward ``a`` with smallest panel ~``inner``."""
    if not (0 < inner < b - a):
        return np.array([a, b])
    pts = [b - a]
    while pts[-1] / ratio > inner:
        pts.append(pts[-1] / ratio)
    edges = [a] + [a + p for p in reversed(pts)]
    edges[-1] = b
    return np.array(edges)
