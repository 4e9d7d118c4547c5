r"""Evaluation of the Mittag-Leffler function :math:`E_\alpha(z)` for
:math:`0 < \alpha \le 1` on the whole complex plane.

Three regimes are stitched together:

* **Taylor series** :math:`E_\alpha(z) = \sum_{n\ge 0} z^n/\Gamma(1+\alpha n)`
  near the origin.  The series converges everywhere but suffers catastrophic
  cancellation once the largest term :math:`\sim e^{|z|^{1/\alpha}}` dwarfs the
  result, so it is only used for :math:`|z| \le \max(1, 8^\alpha)`.

* **Contour integral** over the Hankel-type contour :math:`\gamma(\eta, r)`
  (two rays at angles :math:`\pm\eta`, :math:`\pi/2 < \eta < \pi`, joined by a
  circular arc of radius ``r``),

  .. math::
      E_\alpha(z) = \frac{1}{2\pi i} \int_{\gamma(\eta,r)}
      \frac{\zeta^{\alpha-1} e^\zeta}{\zeta^\alpha - z}\, d\zeta
      \;+\; \frac{e^{z^{1/\alpha}}}{\alpha}\,
      \mathbf{1}\{|\arg z| < \alpha\eta\},

  the residue term appearing whenever the pole :math:`\zeta = z^{1/\alpha}`
  lies inside the contour.  The contour angle is picked from a small palette so
  the pole keeps a safe angular distance from the rays, which lets one shared
  node set serve a whole batch of arguments.

* **Exponentially-improved asymptotics** for :math:`|z| \ge 50` outside the
  central sector,

  .. math::
      E_\alpha(z) = \frac{e^{z^{1/\alpha}}}{\alpha}\,
      \mathbf{1}\{|\arg z| < \alpha\pi\}
      \;-\; \sum_{k\ge 1} \frac{z^{-k}}{\Gamma(1-\alpha k)},

  truncated at the smallest term (the series is summed until terms stop
  decreasing, at most 30 of them; at :math:`|z| = 50` this reaches double
  precision for every :math:`\alpha` in range).

Conjugate symmetry is enforced structurally: arguments in the lower half-plane
are reflected to the upper half-plane and the result conjugated, and real
arguments yield exactly real values.

`alpha == 1` collapses to the exponential and is special-cased: in the cut
sector :math:`E_1` is exponentially small, which no fixed-precision contour
rule can resolve, while ``exp`` is exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import rgamma

from .errors import QuadratureError
from .quadrature import gauss_legendre

try:  # hot contour kernel; pure-numpy fallback below keeps the package importable
    import warnings

    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*TBB.*")
        import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

_LOG_EPS = 36.7  # -ln(eps_machine)
_EXP_OVERFLOW = 700.0
_ASYMP_RADIUS = 50.0
_CUT_MARGIN = 0.1
_MAX_ASYMP_TERMS = 30
_ETA_PALETTE = np.array([0.55, 0.65, 0.75, 0.85, 0.95]) * np.pi


class MlRegimeKind(enum.Enum):
    TAYLOR_SERIES = "TaylorSeries"
    CONTOUR_INTEGRAL = "ContourIntegral"
    ASYMPTOTIC = "Asymptotic"


@dataclass(frozen=True)
class MlRegime:
    """Evaluation regime selected for a given (alpha, z)."""

    kind: MlRegimeKind
    switch_radius_small: float
    switch_radius_large: float

    def __post_init__(self) -> None:
        if not self.switch_radius_small < self.switch_radius_large:
            raise ValueError("switch_radius_small must be < switch_radius_large")


@dataclass(frozen=True)
class ContourParams:
    """Discretization of the Hankel-type contour gamma(eta, r).

    ``truncation`` is the arc-length cutoff along the rays, chosen where
    exp(Re zeta) drops below machine-negligible size.
    """

    eta: float
    r: float
    truncation: float
    nodes: int

    def __post_init__(self) -> None:
        if not (np.pi / 2 < self.eta < np.pi):
            raise ValueError("eta must lie in ]pi/2, pi[ for absolute convergence")
        if self.r <= 0:
            raise ValueError("r must be positive")
        if self.truncation <= 0 or self.nodes <= 0:
            raise ValueError("truncation and nodes must be positive")


def series_radius(alpha: float) -> float:
    """Largest |z| at which the Taylor series is free of harmful cancellation."""
    return max(1.0, 8.0 ** alpha)


def select_regime(alpha: float, z: complex) -> MlRegime:
    """Pure regime selection; depends only on (alpha, z)."""
    _check_alpha(alpha)
    r_small = series_radius(alpha)
    if abs(z) <= r_small:
        kind = MlRegimeKind.TAYLOR_SERIES
    elif abs(z) >= _ASYMP_RADIUS and abs(np.angle(complex(z))) >= np.pi * alpha / 2 + _CUT_MARGIN:
        kind = MlRegimeKind.ASYMPTOTIC
    else:
        kind = MlRegimeKind.CONTOUR_INTEGRAL
    return MlRegime(kind, r_small, _ASYMP_RADIUS)


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in ]0, 1], got {alpha}")


def _check_overflow(alpha: float, z: np.ndarray) -> None:
    # the value grows like exp(z^(1/alpha)) in the central sector
    phi = np.abs(np.angle(z))
    central = phi < np.pi * alpha / 2
    if not np.any(central):
        return
    zc = z[central]
    re_root = np.abs(zc) ** (1.0 / alpha) * np.cos(np.angle(zc) / alpha)
    if np.any(re_root > _EXP_OVERFLOW):
        raise OverflowError(
            f"Re(z^(1/alpha)) exceeds exponent range (max {float(np.max(re_root)):.3g})"
        )


def _series_coeffs(alpha: float, rmax: float, order: int) -> np.ndarray:
    """Taylor coefficients of the order-th derivative, long enough for |z|<=rmax."""
    n = np.arange(0, 64)
    while True:
        c = rgamma(1.0 + alpha * n)
        with np.errstate(divide="ignore"):
            logterm = n * np.log(max(rmax, 1e-30)) + np.log(np.abs(c) + 1e-320)
        tail = logterm[-8:]
        if np.all(tail < -46.0) or n.size > 2048:
            break
        n = np.arange(0, n.size * 2)
    if order == 0:
        return c
    # term-wise differentiated series: coefficient n(n-1)...(n-order+1)
    fac = np.ones_like(c)
    for j in range(order):
        fac *= np.maximum(n - j, 0)
    return (fac * c)[order:]


def _series_many(alpha: float, z: np.ndarray, order: int) -> np.ndarray:
    c = _series_coeffs(alpha, float(np.max(np.abs(z), initial=0.0)), order)
    out = np.full(z.shape, c[-1], dtype=complex)
    for k in range(c.size - 2, -1, -1):
        out = out * z + c[k]
    return out


def _em1_series_many(alpha: float, z: np.ndarray) -> np.ndarray:
    """E_alpha(z) - 1 summed from n = 1, cancellation-free near the origin."""
    c = _series_coeffs(alpha, float(np.max(np.abs(z), initial=0.0)), 0)[1:]
    out = np.full(z.shape, c[-1], dtype=complex)
    for k in range(c.size - 2, -1, -1):
        out = out * z + c[k]
    return out * z


def _exp_term(alpha: float, z: np.ndarray, order: int) -> np.ndarray:
    """exp(z^(1/alpha))/alpha and its first two z-derivatives."""
    root = z ** (1.0 / alpha)
    e = np.exp(root)
    if order == 0:
        return e / alpha
    if order == 1:
        return e * z ** (1.0 / alpha - 1.0) / alpha**2
    return (
        e
        * (z ** (2.0 / alpha - 2.0) / alpha + (1.0 / alpha - 1.0) * z ** (1.0 / alpha - 2.0))
        / alpha**2
    )


def _asymptotic_many(alpha: float, z: np.ndarray, order: int) -> np.ndarray:
    """Exponentially-improved expansion, truncated at the smallest term."""
    out = np.zeros(z.shape, dtype=complex)
    zinv = 1.0 / z
    best = np.full(z.shape, np.inf)
    done = np.zeros(z.shape, dtype=bool)
    for k in range(1, _MAX_ASYMP_TERMS + 1):
        coeff = rgamma(1.0 - alpha * k)
        if coeff == 0.0:
            continue  # 1/Gamma hits a pole of Gamma; the term is absent
        if order == 0:
            term = -coeff * zinv**k
        else:
            fac = 1.0
            for j in range(order):
                fac *= k + j
            term = -coeff * (-1.0) ** order * fac * zinv ** (k + order)
        mag = np.abs(term)
        grow = mag > best
        done |= grow
        out = np.where(done, out, out + term)
        best = np.where(done, best, np.minimum(best, mag))
        if np.all(done | (mag < 1e-18 * np.abs(out) + 1e-300)):
            break
    has_pole = np.abs(np.angle(z)) < alpha * np.pi
    if np.any(has_pole):
        zp = z[has_pole]
        add = np.zeros(out.shape, dtype=complex)
        add[has_pole] = _exp_term(alpha, zp, order)
        out = out + add
    return out


def _contour_nodes(alpha: float, eta: float, refine: int) -> tuple[np.ndarray, np.ndarray]:
    """Shared contour nodes zeta_j and complex measure dzeta_j (orientation included)."""
    r = 0.5
    trunc = (_LOG_EPS + 12.0) / abs(np.cos(eta))
    # rays: panels graded from fine near the arc outward, capped so a 16-node
    # rule resolves the exp(i s sin(eta)) oscillation along the ray
    cap = max(0.5, 3.0 / max(np.sin(eta), 1e-3)) / 2 ** (refine - 1)
    edges = [0.0]
    step = 0.25 / 2**refine
    while edges[-1] < trunc - r:
        edges.append(min(edges[-1] + step, trunc - r))
        step = min(step * 1.7, cap)
    s_nodes = []
    s_w = []
    gx, gw = gauss_legendre(16)
    for a, b in zip(edges[:-1], edges[1:]):
        half, mid = 0.5 * (b - a), 0.5 * (b + a)
        s_nodes.append(r + mid + half * gx)
        s_w.append(half * gw)
    s_nodes = np.concatenate(s_nodes)
    s_w = np.concatenate(s_w)
    # arc: |phi| <= eta
    n_arc = 6 * 2**refine
    phi_nodes = []
    phi_w = []
    arc_edges = np.linspace(-eta, eta, n_arc + 1)
    for a, b in zip(arc_edges[:-1], arc_edges[1:]):
        half, mid = 0.5 * (b - a), 0.5 * (b + a)
        phi_nodes.append(mid + half * gx)
        phi_w.append(half * gw)
    phi_nodes = np.concatenate(phi_nodes)
    phi_w = np.concatenate(phi_w)

    zeta_out = s_nodes * np.exp(1j * eta)
    zeta_in = s_nodes * np.exp(-1j * eta)
    zeta_arc = r * np.exp(1j * phi_nodes)
    zeta = np.concatenate([zeta_in, zeta_arc, zeta_out])
    dzeta = np.concatenate(
        [-np.exp(-1j * eta) * s_w, 1j * zeta_arc * phi_w, np.exp(1j * eta) * s_w]
    )
    return zeta, dzeta


if _HAVE_NUMBA:

    @numba.njit(parallel=True, cache=True)
    def _pole_sum_kernel(ar, ai, br, bi, zr, zi, order):  # pragma: no cover - jit
        n = zr.size
        out = np.empty(n, dtype=np.complex128)
        for i in numba.prange(n):
            sr = 0.0
            si = 0.0
            for j in range(ar.size):
                dr = br[j] - zr[i]
                di = bi[j] - zi[i]
                q = 1.0 / (dr * dr + di * di)
                t = dr * q
                u = -di * q  # 1/(b-z) = (dr - i di)/|d|^2
                if order == 1:
                    dr, di = t * t - u * u, 2.0 * t * u  # 1/(b-z)^2
                elif order == 2:
                    pr, pi = t * t - u * u, 2.0 * t * u
                    dr, di = 2.0 * (pr * t - pi * u), 2.0 * (pr * u + pi * t)
                else:
                    dr, di = t, u
                sr += ar[j] * dr - ai[j] * di
                si += ar[j] * di + ai[j] * dr
            out[i] = complex(sr, si)
        return out


def _pole_sum(a: np.ndarray, b: np.ndarray, z: np.ndarray, order: int) -> np.ndarray:
    """sum_j a_j / (b_j - z_i)^(order+1), including the m! factor for m<=2."""
    if _HAVE_NUMBA and z.size * b.size > 50_000:
        return _pole_sum_kernel(
            np.ascontiguousarray(a.real), np.ascontiguousarray(a.imag),
            np.ascontiguousarray(b.real), np.ascontiguousarray(b.imag),
            np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag), order,
        )
    out = np.empty(z.shape, dtype=complex)
    fac = 2.0 if order == 2 else 1.0
    chunk = max(1, int(4e6 // max(b.size, 1)))
    for lo in range(0, z.size, chunk):
        denom = b[None, :] - z[lo : lo + chunk, None]
        out[lo : lo + chunk] = fac * np.sum(a[None, :] / denom ** (order + 1), axis=1)
    return out


_CONTOUR_CACHE: dict[tuple[float, float, int], tuple[np.ndarray, np.ndarray]] = {}


def _contour_eval_bucket(
    alpha: float, z: np.ndarray, eta: float, order: int, refine: int
) -> np.ndarray:
    key = (alpha, eta, refine)
    if key not in _CONTOUR_CACHE:
        if len(_CONTOUR_CACHE) > 256:
            _CONTOUR_CACHE.clear()
        zeta, dzeta = _contour_nodes(alpha, eta, refine)
        a = zeta ** (alpha - 1.0) * np.exp(zeta) * dzeta / (2j * np.pi)
        b = zeta**alpha
        _CONTOUR_CACHE[key] = (a, b)
    a, b = _CONTOUR_CACHE[key]
    out = _pole_sum(a, b, z, order)
    has_pole = np.abs(np.angle(z)) < alpha * eta
    if np.any(has_pole):
        add = np.zeros(z.shape, dtype=complex)
        add[has_pole] = _exp_term(alpha, z[has_pole], order)
        out = out + add
    return out


def _contour_many(alpha: float, z: np.ndarray, order: int) -> np.ndarray:
    # Bucket by contour angle, keeping the denominator dip (where the image ray
    # arg(zeta^alpha) = alpha*eta passes closest to arg z) as far away as the
    # palette allows.  The dip direction is arg(z)/alpha even past pi.
    psi = np.abs(np.angle(z)) / alpha
    choice = np.argmax(np.abs(_ETA_PALETTE[None, :] - psi[:, None]), axis=1)
    choice[psi >= 1.45 * np.pi] = _ETA_PALETTE.size - 1  # far from every ray: cheapest
    out = np.empty(z.shape, dtype=complex)
    for i, eta in enumerate(_ETA_PALETTE):
        mask = choice == i
        if not np.any(mask):
            continue
        zz = z[mask]
        prev = _contour_eval_bucket(alpha, zz, eta, order, refine=1)
        for refine in range(2, 7):
            val = _contour_eval_bucket(alpha, zz, eta, order, refine=refine)
            err = np.max(np.abs(val - prev) / np.maximum(np.abs(val), 1e-290))
            prev = val
            if err <= 1e-10:
                break
        else:
            raise QuadratureError("Mittag-Leffler contour refinement stalled")
        out[mask] = val
    return out


def _eval_upper(alpha: float, z: np.ndarray, order: int) -> np.ndarray:
    """Dispatch on regimes; assumes Im(z) >= 0 elementwise."""
    out = np.empty(z.shape, dtype=complex)
    absz = np.abs(z)
    phi = np.angle(z)
    # differentiated series terms carry n^order factors, so cancellation bites
    # a little earlier; shrink the series window for derivatives
    m_series = absz <= series_radius(alpha) * (1.0 if order == 0 else 0.8)
    m_asymp = (~m_series) & (absz >= _ASYMP_RADIUS) & (np.abs(phi) >= np.pi * alpha / 2 + _CUT_MARGIN)
    m_cont = ~(m_series | m_asymp)
    if np.any(m_series):
        out[m_series] = _series_many(alpha, z[m_series], order)
    if np.any(m_asymp):
        out[m_asymp] = _asymptotic_many(alpha, z[m_asymp], order)
    if np.any(m_cont):
        out[m_cont] = _contour_many(alpha, z[m_cont], order)
    return out


def _eval_many(alpha: float, z: np.ndarray, order: int) -> np.ndarray:
    _check_alpha(alpha)
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise ValueError("z must be finite")
    if alpha == 1.0:
        if np.any(z.real > _EXP_OVERFLOW):
            raise OverflowError("Re(z) exceeds exponent range for E_1(z) = exp(z)")
        return np.exp(z)
    _check_overflow(alpha, z)
    flat = z.ravel()
    lower = flat.imag < 0.0
    zz = np.where(lower, np.conj(flat), flat)
    res = _eval_upper(alpha, zz, order)
    res = np.where(lower, np.conj(res), res)
    real_in = flat.imag == 0.0
    res = np.where(real_in, res.real + 0.0j, res)
    return res.reshape(z.shape)


def ml_eval_many(alpha: float, z: np.ndarray) -> np.ndarray:
    """Vectorized E_alpha over an array of complex arguments."""
    return _eval_many(alpha, z, 0)


def ml_deriv_many(alpha: float, z: np.ndarray, order: int = 1) -> np.ndarray:
    """Vectorized derivative d^m/dz^m E_alpha(z), m in {1, 2}."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    return _eval_many(alpha, z, order)


def ml_em1_many(alpha: float, z: np.ndarray) -> np.ndarray:
    """Vectorized E_alpha(z) - 1, cancellation-free for small |z|."""
    _check_alpha(alpha)
    z = np.asarray(z, dtype=complex)
    if alpha == 1.0:
        if np.any(z.real > _EXP_OVERFLOW):
            raise OverflowError("Re(z) exceeds exponent range for E_1(z) = exp(z)")
        return np.expm1(z)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) <= 1.0
    if np.any(small):
        zs = z[small]
        lower = zs.imag < 0.0
        zz = np.where(lower, np.conj(zs), zs)
        r = _em1_series_many(alpha, zz)
        r = np.where(lower, np.conj(r), r)
        out[small] = np.where(zs.imag == 0.0, r.real + 0.0j, r)
    if np.any(~small):
        out[~small] = ml_eval_many(alpha, z[~small]) - 1.0
    return out


def em1_ratio_many(alpha: float, zeta: np.ndarray) -> np.ndarray:
    """(E_alpha(zeta) - 1)/zeta, stable through zeta = 0 where it equals 1/Gamma(1+alpha)."""
    _check_alpha(alpha)
    zeta = np.asarray(zeta, dtype=complex)
    out = np.empty(zeta.shape, dtype=complex)
    small = np.abs(zeta) <= 1.0
    if np.any(small):
        c = _series_coeffs(alpha, 1.0, 0)[1:]
        zs = zeta[small]
        acc = np.full(zs.shape, c[-1], dtype=complex)
        for k in range(c.size - 2, -1, -1):
            acc = acc * zs + c[k]
        out[small] = np.where(zs.imag == 0.0, acc.real + 0.0j, acc)
    big = ~small
    if np.any(big):
        zb = zeta[big]
        out[big] = ml_em1_many(alpha, zb) / zb
    return out


def em1_ratio_deriv_many(alpha: float, zeta: np.ndarray) -> np.ndarray:
    """d/dzeta of (E_alpha(zeta)-1)/zeta; at zeta = 0 this is 1/Gamma(1+2 alpha)."""
    _check_alpha(alpha)
    zeta = np.asarray(zeta, dtype=complex)
    out = np.empty(zeta.shape, dtype=complex)
    small = np.abs(zeta) <= 1.0
    if np.any(small):
        c = _series_coeffs(alpha, 1.0, 0)
        n = np.arange(c.size)
        cd = ((n - 1) * c)[2:]  # coefficients of sum (n-1) zeta^(n-2) / Gamma(1+alpha n)
        zs = zeta[small]
        acc = np.full(zs.shape, cd[-1], dtype=complex)
        for k in range(cd.size - 2, -1, -1):
            acc = acc * zs + cd[k]
        out[small] = np.where(zs.imag == 0.0, acc.real + 0.0j, acc)
    big = ~small
    if np.any(big):
        zb = zeta[big]
        e1 = ml_em1_many(alpha, zb)
        ep = ml_deriv_many(alpha, zb, 1)
        out[big] = (ep * zb - e1) / (zb * zb)
    return out


def ml_eval(alpha: float, z: complex) -> complex:
    """E_alpha(z) for 0 < alpha <= 1 and finite complex z."""
    return complex(ml_eval_many(alpha, np.asarray([z]))[0])


def ml_deriv(alpha: float, z: complex, order: int = 1) -> complex:
    """m-th derivative of E_alpha at z, m in {1, 2}; equals exp(z) for alpha = 1."""
    return complex(ml_deriv_many(alpha, np.asarray([z]), order)[0])
