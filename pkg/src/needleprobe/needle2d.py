r"""Explicit 2D needle functions and their exhaustion-driven schedules.

The needle function with tip at ``x``, direction ``omega`` and parameters
``(alpha, tau)`` is

.. math::
    v(y; \alpha, \tau, \omega) = -\frac{E_\alpha(\tau\, y\,\bar\omega) - 1}{y},

with the point :math:`y` identified with the complex number
:math:`y_1 + i y_2`.  It is harmonic on the whole plane, takes the value
:math:`-\tau\bar\omega / \Gamma(1+\alpha)` at the tip, and converges to the
singular kernel :math:`G(y) = 1/(y_1 + i y_2)` as :math:`\tau \to \infty`
locally uniformly outside the closed cone of half-angle
:math:`\pi\alpha/2` around ``omega``.

Schedules pair a decreasing sequence ``alpha_n`` (cone shrinks onto the ray)
with an increasing ``tau_n`` found by doubling search, so that the discrete
H1-style deviation from ``G`` over the n-th exhaustion set drops below
``eps0 * 2^-n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ScheduleError
from .mittag_leffler import em1_ratio_deriv_many, em1_ratio_many

_TAU_MAX = 1e12


@dataclass(frozen=True)
class Direction2:
    """Unit direction omega with its positively-oriented normal omega_perp."""

    omega: tuple[float, float]

    def __post_init__(self) -> None:
        n = float(np.hypot(*self.omega))
        if abs(n - 1.0) > 1e-14:
            raise ValueError(f"direction must be a unit vector, |omega| = {n!r}")

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "Direction2":
        v = np.asarray(v, dtype=float)
        n = float(np.hypot(v[0], v[1]))
        if n == 0:
            raise ValueError("zero direction vector")
        return cls((v[0] / n, v[1] / n))

    @classmethod
    def from_angle(cls, theta: float) -> "Direction2":
        return cls((float(np.cos(theta)), float(np.sin(theta))))

    @property
    def omega_perp(self) -> tuple[float, float]:
        return (-self.omega[1], self.omega[0])

    @property
    def conj_complex(self) -> complex:
        """bar(omega) as a complex number, so that y . (omega + i omega_perp) = y * conj_complex."""
        return complex(self.omega[0], -self.omega[1])


@dataclass(frozen=True)
class Needle:
    """Straight needle: tip point plus unit direction (the ray x + t*omega, t >= 0)."""

    tip: tuple[float, float]
    direction: Direction2

    @property
    def tip_complex(self) -> complex:
        return complex(self.tip[0], self.tip[1])


@dataclass(frozen=True)
class Box2:
    """Axis-aligned open box, the building block of exhaustion sets."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self) -> None:
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("degenerate box")

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.xmax - self.xmin, self.ymax - self.ymin))

    def sample_grid(self, divisions: int = 64) -> tuple[np.ndarray, float]:
        """Uniform samples (as complex points) with spacing diameter/divisions,
        together with the cell area."""
        h = self.diameter / divisions
        nx = max(2, int(np.ceil((self.xmax - self.xmin) / h)) + 1)
        ny = max(2, int(np.ceil((self.ymax - self.ymin) / h)) + 1)
        xs = np.linspace(self.xmin, self.xmax, nx)
        ys = np.linspace(self.ymin, self.ymax, ny)
        X, Y = np.meshgrid(xs, ys)
        cell = (xs[1] - xs[0]) * (ys[1] - ys[0])
        return (X + 1j * Y).ravel(), cell


@dataclass
class NeedleSchedule:
    """Parameter sequences (alpha_n, tau_n) with their exhaustion sets and tolerances."""

    alphas: list[float] = field(default_factory=list)
    taus: list[float] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)
    exhaustion: list[list[Box2]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.alphas)

    def validate(self) -> None:
        a = np.asarray(self.alphas)
        t = np.asarray(self.taus)
        e = np.asarray(self.epsilons)
        if np.any(a <= 0) or np.any(a > 1):
            raise ValueError("alphas must lie in ]0, 1]")
        if np.any(np.diff(a) > 1e-15):
            raise ValueError("alphas must be non-increasing")
        if np.any(t <= 0) or np.any(np.diff(t) < 0):
            raise ValueError("taus must be positive and non-decreasing")
        if np.any(e <= 0) or np.any(np.diff(e) >= 0):
            raise ValueError("epsilons must decrease to 0")


def g_singular(w: np.ndarray) -> np.ndarray:
    """G(y) = 1/(y1 + i y2) as a function of the complex variable w."""
    return 1.0 / np.asarray(w, dtype=complex)


def g_singular_grad(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=complex)
    d = -1.0 / (w * w)
    return d, 1j * d


def needle_values(w: np.ndarray, alpha: float, tau: float, direction: Direction2) -> np.ndarray:
    """v at offsets w = (y - x) as complex numbers; finite everywhere, tip included."""
    w = np.asarray(w, dtype=complex)
    c = tau * direction.conj_complex
    return -c * em1_ratio_many(alpha, c * w)


def needle_gradients(
    w: np.ndarray, alpha: float, tau: float, direction: Direction2
) -> tuple[np.ndarray, np.ndarray]:
    """(d/dy1 v, d/dy2 v) at offsets w; v is holomorphic in w, so d2 = i * d1."""
    w = np.asarray(w, dtype=complex)
    c = tau * direction.conj_complex
    d1 = -(c * c) * em1_ratio_deriv_many(alpha, c * w)
    return d1, 1j * d1


def needle2d_eval(y, x, alpha: float, tau: float, direction: Direction2) -> complex:
    """Needle function at point y for tip x; at y = x this is -tau*conj(omega)/Gamma(1+alpha)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    w = complex(y[0] - x[0], y[1] - x[1])
    return complex(needle_values(np.asarray([w]), alpha, tau, direction)[0])


def needle2d_grad(y, x, alpha: float, tau: float, direction: Direction2) -> tuple[complex, complex]:
    """Cartesian gradient (d1 v, d2 v) of the (complex-valued) needle function."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    w = complex(y[0] - x[0], y[1] - x[1])
    d1, d2 = needle_gradients(np.asarray([w]), alpha, tau, direction)
    return complex(d1[0]), complex(d2[0])


def h1_deviation(
    points: np.ndarray, cell_area: float, alpha: float, tau: float, direction: Direction2,
    tip: complex,
) -> float:
    """Discrete H1-style deviation ||v - G|| over sample points (value + gradient)."""
    w = np.asarray(points, dtype=complex) - tip
    dv = needle_values(w, alpha, tau, direction) - g_singular(w)
    g1, g2 = needle_gradients(w, alpha, tau, direction)
    e1, e2 = g_singular_grad(w)
    total = np.sum(np.abs(dv) ** 2 + np.abs(g1 - e1) ** 2 + np.abs(g2 - e2) ** 2) * cell_area
    return float(np.sqrt(total))


def _min_angle_to_ray(points: np.ndarray, tip: complex, direction: Direction2) -> float:
    w = points - tip
    if np.any(np.abs(w) == 0.0):
        return 0.0
    ang = np.abs(np.angle(w * direction.conj_complex))
    return float(np.min(ang))


def build_schedule(
    exhaustion: Sequence[Sequence[Box2]],
    needle: Needle,
    eps0: float,
    grid_divisions: int = 64,
    alpha_safety: float = 0.95,
) -> NeedleSchedule:
    """Choose (alpha_n, tau_n) for the given exhaustion per the cone-avoidance rule.

    alpha_n is taken small enough that the closed cone of half-angle
    pi*alpha_n/2 around the needle misses the n-th set; tau_n is found by
    doubling until the sampled H1 deviation from G drops below eps0 * 2^-n.
    Raises ScheduleError if a set touches the needle ray or the search
    exceeds tau = 1e12.
    """
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    sched = NeedleSchedule()
    tip = needle.tip_complex
    alpha_prev = 1.0
    tau_prev = 1.0
    for n, boxes in enumerate(exhaustion, start=1):
        eps_n = eps0 * 2.0 ** (-n)
        samples = []
        cells = []
        for box in boxes:
            pts, cell = box.sample_grid(grid_divisions)
            samples.append(pts)
            cells.append(np.full(pts.shape, cell))
        if not samples:
            continue
        pts = np.concatenate(samples)
        cell_w = np.concatenate(cells)
        min_ang = _min_angle_to_ray(pts, tip, needle.direction)
        if min_ang <= 0.0:
            raise ScheduleError(f"exhaustion set {n} touches the needle ray")
        alpha_n = min(alpha_prev, alpha_safety * 2.0 * min_ang / np.pi, 1.0)
        tau_n = max(tau_prev, 1.0)
        while True:
            w = pts - tip
            dv = needle_values(w, alpha_n, tau_n, needle.direction) - g_singular(w)
            g1, g2 = needle_gradients(w, alpha_n, tau_n, needle.direction)
            e1, e2 = g_singular_grad(w)
            dev = float(
                np.sqrt(
                    np.sum(
                        (np.abs(dv) ** 2 + np.abs(g1 - e1) ** 2 + np.abs(g2 - e2) ** 2) * cell_w
                    )
                )
            )
            if dev < eps_n:
                break
            tau_n *= 2.0
            if tau_n > _TAU_MAX:
                raise ScheduleError(
                    f"doubling search exceeded tau = {_TAU_MAX:.0e} on set {n} "
                    "(the set likely intersects the convergence cone)"
                )
        sched.alphas.append(alpha_n)
        sched.taus.append(tau_n)
        sched.epsilons.append(eps_n)
        sched.exhaustion.append(list(boxes))
        alpha_prev = alpha_n
        tau_prev = tau_n
    return sched
