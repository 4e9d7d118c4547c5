r"""Bessel functions :math:`J_1` and :math:`J_{1/2}` on the half-line.

:math:`J_1` is evaluated from its ascending series

.. math::
    J_1(s) = \sum_{k\ge 0} \frac{(-1)^k (s/2)^{2k+1}}{k!\,(k+1)!}

for :math:`s \le 12` and from the standard large-argument expansion (DLMF
10.17.3 with :math:`\nu = 1`) beyond, truncated at its smallest term.
:math:`J_{1/2}` has the closed form :math:`\sqrt{2/(\pi w)}\,\sin w`.
"""

from __future__ import annotations

import numpy as np

_J1_SWITCH = 12.0
_SERIES_TERMS = 40


def _j1_series(s: np.ndarray) -> np.ndarray:
    half = 0.5 * s
    h2 = half * half
    term = half.copy()
    out = half.copy()
    for k in range(1, _SERIES_TERMS):
        term = term * (-h2) / (k * (k + 1))
        out = out + term
    return out


def _j1_asymptotic(s: np.ndarray) -> np.ndarray:
    # a_k(1) = (4-1)(4-9)...(4-(2k-1)^2) / (k! 8^k), summed to the smallest term
    x8 = 1.0 / (8.0 * s)
    p = np.ones_like(s)
    q = np.zeros_like(s)
    ak = 1.0
    mag_prev = np.inf
    for k in range(1, 24):
        ak = ak * (4.0 - (2 * k - 1) ** 2) / k
        term = ak * x8**k
        mag = abs(ak) * float(np.min(x8)) ** k
        if mag > mag_prev:
            break
        mag_prev = mag
        if k % 2 == 0:
            p = p + term * (-1.0) ** (k // 2)
        else:
            q = q + term * (-1.0) ** ((k - 1) // 2)
    w = s - 0.75 * np.pi
    return np.sqrt(2.0 / (np.pi * s)) * (np.cos(w) * p - np.sin(w) * q)


def j1_many(s: np.ndarray) -> np.ndarray:
    """Vectorized J_1 on s >= 0."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("bessel_j1 requires s >= 0")
    out = np.empty_like(s)
    small = s <= _J1_SWITCH
    if np.any(small):
        out[small] = _j1_series(s[small])
    if np.any(~small):
        out[~small] = _j1_asymptotic(s[~small])
    return out


def j1_signed(s: np.ndarray) -> np.ndarray:
    """Odd extension of J_1 to the whole line (J_1(-s) = -J_1(s))."""
    s = np.asarray(s, dtype=float)
    return np.sign(s) * j1_many(np.abs(s))


def bessel_j1(s: float) -> float:
    """J_1(s) for s >= 0; satisfies |J_1(s)| <= s/2."""
    return float(j1_many(np.asarray([s]))[0])


def bessel_j_half(w: float) -> float:
    """J_{1/2}(w) = sqrt(2/(pi w)) sin(w) for w > 0."""
    if w <= 0:
        raise ValueError("bessel_j_half requires w > 0")
    return float(np.sqrt(2.0 / (np.pi * w)) * np.sin(w))
