"""Smooth closed parametric curves and scan-domain geometry validation.

All curves are parametrized counterclockwise by t in [0, 2pi); with that
orientation the normal (y2', -y1')/|y'| points outward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from matplotlib.path import Path

from .errors import GeometryError


def _cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """z-component of the cross product of 2D vectors (np.cross on 2D is deprecated)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class Curve:
    """Interface: point(t), derivative(t), second_derivative(t) for t arrays."""

    def point(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def second_derivative(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def polygon(self, n: int = 512) -> np.ndarray:
        return self.point(np.linspace(0.0, 2 * np.pi, n, endpoint=False))

    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Circle(Curve):
    cx: float = 0.0
    cy: float = 0.0
    r: float = 1.0

    def __post_init__(self) -> None:
        if self.r <= 0:
            raise GeometryError("circle radius must be positive")

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([self.cx + self.r * np.cos(t), self.cy + self.r * np.sin(t)], axis=-1)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([-self.r * np.sin(t), self.r * np.cos(t)], axis=-1)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([-self.r * np.cos(t), -self.r * np.sin(t)], axis=-1)

    def spec(self) -> str:
        if (self.cx, self.cy) == (0.0, 0.0):
            return f"circle r={self.r:g}"
        return f"circle {self.cx:g} {self.cy:g} {self.r:g}"


@dataclass(frozen=True)
class Ellipse(Curve):
    cx: float
    cy: float
    a: float
    b: float
    angle: float = 0.0

    def __post_init__(self) -> None:
        if self.a <= 0 or self.b <= 0:
            raise GeometryError("ellipse semi-axes must be positive")

    def _rot(self):
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def point(self, t):
        t = np.asarray(t, dtype=float)
        base = np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=-1)
        return base @ self._rot().T + np.array([self.cx, self.cy])

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        base = np.stack([-self.a * np.sin(t), self.b * np.cos(t)], axis=-1)
        return base @ self._rot().T

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        base = np.stack([-self.a * np.cos(t), -self.b * np.sin(t)], axis=-1)
        return base @ self._rot().T

    def spec(self) -> str:
        return f"ellipse {self.cx:g} {self.cy:g} {self.a:g} {self.b:g} {self.angle:g}"


@dataclass(frozen=True)
class RoundedPolygon(Curve):
    """Convex-corner polygon with circular fillets of the given radius,
    parametrized proportionally to arc length (C^1; curvature jumps at the
    tangency points, a documented approximation for Lipschitz cavities)."""

    vertices: tuple[tuple[float, float], ...]
    corner_radius: float = 0.02
    _pieces: tuple = field(init=False, repr=False, default=())

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=float)
        if verts.shape[0] < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if self.corner_radius <= 0:
            raise GeometryError("corner radius must be positive")
        # enforce counterclockwise orientation
        area2 = float(np.sum(_cross2(verts, np.roll(verts, -1, axis=0))))
        if area2 < 0:
            verts = verts[::-1]
        n = verts.shape[0]
        pieces = []  # ("seg", p0, p1) and ("arc", center, r, a0, a1)
        tang = []
        for i in range(n):
            prev_v = verts[(i - 1) % n]
            v = verts[i]
            next_v = verts[(i + 1) % n]
            e_in = v - prev_v
            e_out = next_v - v
            li, lo = np.linalg.norm(e_in), np.linalg.norm(e_out)
            u_in, u_out = e_in / li, e_out / lo
            cosang = float(np.clip(-u_in @ u_out, -1.0, 1.0))
            theta = np.arccos(cosang)  # interior angle
            d = self.corner_radius / np.tan(theta / 2.0)
            if d > 0.45 * min(li, lo):
                raise GeometryError("corner radius too large for an edge")
            p_in = v - u_in * d
            p_out = v + u_out * d
            bis = -(u_in - u_out)
            bis = bis / np.linalg.norm(bis)
            center = v + bis * self.corner_radius / np.sin(theta / 2.0)
            a0 = np.arctan2(*(p_in - center)[::-1])
            a1 = np.arctan2(*(p_out - center)[::-1])
            while a1 < a0:
                a1 += 2 * np.pi
            tang.append((p_in, p_out, center, a0, a1))
        for i in range(n):
            _, p_out, _, _, _ = tang[i]
            p_in_next, _, _, _, _ = tang[(i + 1) % n]
            pieces.append(("arc", tang[i][2], self.corner_radius, tang[i][3], tang[i][4]))
            pieces.append(("seg", p_out, p_in_next))
        lengths = []
        for kind, *args in pieces:
            if kind == "seg":
                lengths.append(float(np.linalg.norm(args[1] - args[0])))
            else:
                lengths.append(args[1] * (args[3] - args[2]))
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        object.__setattr__(self, "_pieces", (tuple(pieces), cum, cum[-1]))

    def _locate(self, t):
        pieces, cum, total = self._pieces
        s = (np.asarray(t, dtype=float) % (2 * np.pi)) * total / (2 * np.pi)
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(pieces) - 1)
        return pieces, cum, total, s, idx

    def point(self, t):
        pieces, cum, total, s, idx = self._locate(t)
        out = np.empty(s.shape + (2,))
        for k, (kind, *args) in enumerate(pieces):
            m = idx == k
            if not np.any(m):
                continue
            frac = (s[m] - cum[k]) / max(cum[k + 1] - cum[k], 1e-300)
            if kind == "seg":
                p0, p1 = args
                out[m] = p0 + frac[:, None] * (p1 - p0)
            else:
                c, r, a0, a1 = args
                a = a0 + frac * (a1 - a0)
                out[m] = c + r * np.stack([np.cos(a), np.sin(a)], axis=-1)
        return out

    def derivative(self, t):
        pieces, cum, total, s, idx = self._locate(t)
        scale = total / (2 * np.pi)
        out = np.empty(s.shape + (2,))
        for k, (kind, *args) in enumerate(pieces):
            m = idx == k
            if not np.any(m):
                continue
            if kind == "seg":
                p0, p1 = args
                u = (p1 - p0) / np.linalg.norm(p1 - p0)
                out[m] = u * scale
            else:
                c, r, a0, a1 = args
                frac = (s[m] - cum[k]) / max(cum[k + 1] - cum[k], 1e-300)
                a = a0 + frac * (a1 - a0)
                out[m] = np.stack([-np.sin(a), np.cos(a)], axis=-1) * scale
        return out

    def second_derivative(self, t):
        pieces, cum, total, s, idx = self._locate(t)
        scale = total / (2 * np.pi)
        out = np.zeros(s.shape + (2,))
        for k, (kind, *args) in enumerate(pieces):
            m = idx == k
            if not np.any(m) or kind == "seg":
                continue
            c, r, a0, a1 = args
            frac = (s[m] - cum[k]) / max(cum[k + 1] - cum[k], 1e-300)
            a = a0 + frac * (a1 - a0)
            out[m] = -np.stack([np.cos(a), np.sin(a)], axis=-1) * scale**2 / r
        return out

    def spec(self) -> str:
        flat = " ".join(f"{c:g}" for xy in self.vertices for c in xy)
        return f"rounded_polygon {self.corner_radius:g} {flat}"


def parse_curve(text: str) -> Curve:
    """Parse 'circle r=1' | 'circle cx cy r' | 'disk cx cy r' | 'ellipse cx cy a b [angle]'
    | 'rounded_polygon rc x1 y1 x2 y2 ...'."""
    parts = text.strip().split()
    if not parts:
        raise GeometryError("empty curve spec")
    kind = parts[0].lower()
    try:
        if kind == "circle" and len(parts) == 2 and parts[1].startswith("r="):
            return Circle(0.0, 0.0, float(parts[1][2:]))
        if kind in ("circle", "disk"):
            cx, cy, r = map(float, parts[1:4])
            return Circle(cx, cy, r)
        if kind == "ellipse":
            vals = list(map(float, parts[1:]))
            if len(vals) == 4:
                vals.append(0.0)
            return Ellipse(*vals[:5])
        if kind == "rounded_polygon":
            rc = float(parts[1])
            coords = list(map(float, parts[2:]))
            if len(coords) % 2 or len(coords) < 6:
                raise GeometryError(f"bad vertex list in {text!r}")
            verts = tuple((coords[i], coords[i + 1]) for i in range(0, len(coords), 2))
            return RoundedPolygon(verts, rc)
    except (ValueError, IndexError) as exc:
        raise GeometryError(f"cannot parse curve spec {text!r}: {exc}") from exc
    raise GeometryError(f"unknown curve kind {kind!r}")


def _as_path(curve: Curve, n: int = 512) -> Path:
    return Path(curve.polygon(n), closed=False)


def _polyline_self_intersects(pts: np.ndarray) -> bool:
    # O(n^2) segment test on the sampled polygon; adequate at desk scale
    n = pts.shape[0]
    a = pts
    b = np.roll(pts, -1, axis=0)
    for i in range(n):
        d1 = b[i] - a[i]
        js = np.arange(i + 2, n if i > 0 else n - 1)
        if js.size == 0:
            continue
        d2 = b[js] - a[js]
        denom = _cross2(d1, d2)
        rel = a[js] - a[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = _cross2(rel, d2) / denom
            u = _cross2(rel, d1) / denom
        hit = (np.abs(denom) > 1e-14) & (t > 1e-12) & (t < 1 - 1e-12) & (u > 1e-12) & (u < 1 - 1e-12)
        if np.any(hit):
            return True
    return False


@dataclass
class Geometry2:
    """Outer boundary plus disjoint cavities with connected complement."""

    outer: Curve = field(default_factory=Circle)
    cavities: list[Curve] = field(default_factory=list)

    def validate(self, raster: int = 160) -> None:
        for c in [self.outer, *self.cavities]:
            if _polyline_self_intersects(c.polygon(256)):
                raise GeometryError("curve is self-intersecting")
        outer_path = _as_path(self.outer)
        for i, c in enumerate(self.cavities):
            poly = c.polygon(256)
            if not outer_path.contains_points(poly * (1.0 + 1e-9)).all():
                raise GeometryError(f"cavity {i} is not strictly inside the outer boundary")
            for j, other in enumerate(self.cavities):
                if j <= i:
                    continue
                other_path = _as_path(other)
                if other_path.contains_points(poly).any() or _as_path(c).contains_points(
                    other.polygon(256)
                ).any():
                    raise GeometryError(f"cavities {i} and {j} overlap")
        # connectivity of the complement by flood fill on a raster
        poly = self.outer.polygon(256)
        lo = poly.min(axis=0) - 0.05
        hi = poly.max(axis=0) + 0.05
        xs = np.linspace(lo[0], hi[0], raster)
        ys = np.linspace(lo[1], hi[1], raster)
        X, Y = np.meshgrid(xs, ys)
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        free = outer_path.contains_points(pts)
        for c in self.cavities:
            free &= ~_as_path(c).contains_points(pts)
        free = free.reshape(raster, raster)
        if not free.any():
            raise GeometryError("no free cells in the domain raster")
        seed = np.argwhere(free)[0]
        seen = np.zeros_like(free)
        stack = [tuple(seed)]
        seen[seed[0], seed[1]] = True
        while stack:
            i, j = stack.pop()
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < raster and 0 <= jj < raster and free[ii, jj] and not seen[ii, jj]:
                    seen[ii, jj] = True
                    stack.append((ii, jj))
        if (free & ~seen).sum() > 0:
            raise GeometryError("domain minus cavities is not connected")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Points strictly inside the domain and outside every cavity closure."""
        pts = np.atleast_2d(pts)
        inside = _as_path(self.outer).contains_points(pts)
        for c in self.cavities:
            inside &= ~_as_path(c).contains_points(pts, radius=1e-9)
        return inside


def parse_geometry(outer: str, cavity_specs: Sequence[str]) -> Geometry2:
    geom = Geometry2(outer=parse_curve(outer), cavities=[parse_curve(s) for s in cavity_specs])
    geom.validate()
    return geom
