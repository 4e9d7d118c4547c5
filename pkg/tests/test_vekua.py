"""Vekua transform: closed-form identities, Helmholtz residual, degeneration."""

import numpy as np
import pytest
from scipy.special import gamma

from needleprobe.needle3d import Frame3, needle3d_eval, needle3d_eval_many
from needleprobe.vekua import (
    HelmholtzNeedleParams,
    helmholtz_grad_on_axis,
    helmholtz_needle_eval,
    helmholtz_needle_eval_many,
    helmholtz_needle_on_axis,
    helmholtz_tip_gradient,
    identity_5_10,
    tilde_needle_eval,
    vekua_transform,
)

F = Frame3.standard()


def phi1(pts):
    r = np.linalg.norm(np.atleast_2d(pts), axis=1)
    return 1.0 / (4 * np.pi * np.maximum(r, 1e-300))


def test_identity_5_10():
    lhs, rhs = identity_5_10(0.0)
    assert lhs == 0.0 and rhs == 0.0
    lhs, rhs = identity_5_10(np.pi)
    assert rhs == pytest.approx(2.0, abs=1e-15)
    assert abs(lhs - rhs) <= 1e-8
    lhs, rhs = identity_5_10(1.0)
    assert rhs == pytest.approx(0.45969769413186028, rel=1e-14)
    assert abs(lhs - rhs) <= 1e-10
    for s in np.linspace(0.2, 50.0, 60):
        lhs, rhs = identity_5_10(float(s))
        assert abs(lhs - rhs) <= 1e-8
    with pytest.raises(ValueError):
        identity_5_10(-1.0)


def test_transform_of_fundamental_solution():
    # T_lambda Phi_1 = cos(lambda |y|)/(4 pi |y|)
    rng = np.random.default_rng(0)
    for lam in (1.0, 5.0):
        for _ in range(10):
            y = rng.uniform(-1.5, 1.5, 3)
            r = np.linalg.norm(y)
            if r < 0.1:
                continue
            t = vekua_transform(phi1, lam, y)
            assert t == pytest.approx(np.cos(lam * r) / (4 * np.pi * r), abs=1e-10)


def test_transform_of_constant():
    # T_lambda 1 via the substituted quadrature against a brute-force oracle
    # for the original endpoint-singular t-form
    import scipy.integrate
    import scipy.special

    one = lambda pts: np.ones(np.atleast_2d(pts).shape[0])
    for lam, y in [(1.0, [0.5, 0.0, 0.0]), (3.0, [0.2, -0.4, 0.7])]:
        r = np.linalg.norm(y)
        t = vekua_transform(one, lam, y)
        integrand = lambda tt: scipy.special.j1(lam * r * np.sqrt(1 - tt)) * np.sqrt(
            tt / (1 - tt)
        )
        brute, err = scipy.integrate.quad(integrand, 0.0, 1.0, points=[1.0], limit=200)
        assert err < 1e-8
        assert t == pytest.approx(1.0 - lam * r / 2.0 * brute, abs=1e-8)


def test_small_argument_limit():
    # lam |y| -> 0: the kernel is O(lam |y|), so T v -> v
    y = np.array([0.3, 0.0, 0.1])
    v0 = phi1(y[None, :])[0]
    for lam in (1e-3, 1e-4):
        assert vekua_transform(phi1, lam, y) == pytest.approx(v0, rel=1e-6)


def test_linearity():
    rng = np.random.default_rng(3)
    y = np.array([0.4, -0.2, 0.6])
    u = lambda pts: np.atleast_2d(pts)[:, 0] ** 2 - np.atleast_2d(pts)[:, 1] ** 2
    v = lambda pts: np.atleast_2d(pts)[:, 2]
    a, b = 2.3, -0.7
    comb = lambda pts: a * u(pts) + b * v(pts)
    lhs = vekua_transform(comb, 2.0, y)
    rhs = a * vekua_transform(u, 2.0, y) + b * vekua_transform(v, 2.0, y)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_on_axis_closed_form_cross_check():
    p = HelmholtzNeedleParams(lam=2.0, alpha=0.5, tau=5.0, frame=F)
    for s in (-1.0, -0.3, 0.4, 1.0):
        via_transform = helmholtz_needle_eval([1e-4, 0.0, s], [0, 0, 0], p)
        closed = helmholtz_needle_on_axis(s, p)
        assert via_transform == pytest.approx(closed, rel=2e-6)


def test_tip_values_match_laplace():
    # the Helmholtz tip value equals the Laplace tip value exactly
    p = HelmholtzNeedleParams(lam=3.0, alpha=0.7, tau=4.0, frame=F)
    assert helmholtz_needle_on_axis(0.0, p) == pytest.approx(
        4.0 / (4 * np.pi * gamma(1.7)), rel=1e-13
    )
    g = helmholtz_tip_gradient(p)
    assert g[2] == pytest.approx(16.0 / (4 * np.pi * gamma(2.4)), rel=1e-13)
    assert helmholtz_grad_on_axis(0.0, p)[2] == g[2]


def test_lambda_to_zero_degeneration():
    # |v^lam - v| = O(lam^2) at fixed y
    y = [0.5, -0.3, 0.8]
    v0 = needle3d_eval(y, [0, 0, 0], 0.5, 5.0, F)
    diffs = []
    for lam in (0.4, 0.2, 0.1):
        p = HelmholtzNeedleParams(lam=lam, alpha=0.5, tau=5.0, frame=F)
        diffs.append(abs(helmholtz_needle_eval(y, [0, 0, 0], p) - v0))
    assert 3.0 <= diffs[0] / diffs[1] <= 5.0
    assert 3.0 <= diffs[1] / diffs[2] <= 5.0
    # lam -> 0 on-axis closed form recovers the Laplace value
    p0 = HelmholtzNeedleParams(lam=1e-6, alpha=1.0, tau=1.0, frame=F)
    assert helmholtz_needle_on_axis(1.0, p0) == pytest.approx((np.e - 1) / (4 * np.pi), rel=1e-9)


def test_helmholtz_residual_order():
    # 7-point (laplacian + lam^2) residual decays at order >= 1.8 under halving
    p = HelmholtzNeedleParams(lam=2.0, alpha=0.5, tau=3.0, frame=F)
    rng = np.random.default_rng(8)
    pts = []
    while len(pts) < 12:
        q = rng.uniform(-1.0, 1.0, 3)
        rho = q[0] ** 2 + q[1] ** 2
        if (np.sqrt(rho) > 0.2 or q[2] < -0.2) and np.linalg.norm(q) > 0.4:
            pts.append(q)
    pts = np.array(pts)
    eye = np.eye(3)
    res = {}
    for h in (0.08, 0.04):
        batch = [pts]
        for k in range(3):
            batch.append(pts + h * eye[k])
            batch.append(pts - h * eye[k])
        vals = helmholtz_needle_eval_many(np.concatenate(batch, axis=0), p)
        n = pts.shape[0]
        lap = -6.0 * vals[:n]
        for k in range(6):
            lap = lap + vals[(k + 1) * n : (k + 2) * n]
        res[h] = np.abs(lap / h**2 + p.lam**2 * vals[:n])
    order = np.log(res[0.08] / res[0.04]) / np.log(2.0)
    assert np.median(order) >= 1.8


def test_off_cone_convergence_to_g_lambda():
    # off the cone v^lam -> cos(lam |y|)/(4 pi |y|), deviation shrinking in tau
    # at a rate consistent with the O(tau^(-1/2)) tail bound (>= 3 per
    # tau-decade-squared); the early decades mix the O(tau^(-1/alpha)) pieces
    lam = 1.0
    pts = np.array([[-0.8, 0.0, -0.4], [0.0, -0.9, -0.2]])
    r = np.linalg.norm(pts, axis=1)
    ref = np.cos(lam * r) / (4 * np.pi * r)
    sups = []
    for tau in (10.0, 100.0, 10000.0):
        p = HelmholtzNeedleParams(lam=lam, alpha=0.4, tau=tau, frame=F)
        vals = helmholtz_needle_eval_many(pts, p)
        sups.append(np.max(np.abs(vals - ref)))
    assert sups[1] < sups[0] and sups[2] < sups[1]
    assert sups[1] / sups[2] >= 3.0
    assert sups[0] / sups[2] >= 8.0


def test_tilde_needle():
    p = HelmholtzNeedleParams(lam=2.0, alpha=0.5, tau=5.0, frame=F)
    tv = tilde_needle_eval([0, 0, 0], [0, 0, 0], p)
    assert tv.real == pytest.approx(5.0 / (4 * np.pi * gamma(1.5)), rel=1e-12)
    assert tv.imag == pytest.approx(2.0 / (4 * np.pi), rel=1e-14)
    # imaginary part vanishes where sin(lam r) does
    tv2 = tilde_needle_eval([np.pi / 2, 0, 0], [0, 0, 0], p)
    assert abs(tv2.imag) < 1e-14
    # large tau off the cone: approaches exp(i lam r)/(4 pi r)
    y = [-0.7, 0.0, -0.3]
    r = np.linalg.norm(y)
    p_big = HelmholtzNeedleParams(lam=2.0, alpha=0.4, tau=1e4, frame=F)
    tv3 = tilde_needle_eval(y, [0, 0, 0], p_big)
    ref = np.exp(2j * r) / (4 * np.pi * r)
    assert abs(tv3 - ref) < 5e-3 * abs(ref)


def test_params_validation():
    with pytest.raises(ValueError):
        HelmholtzNeedleParams(lam=0.0, alpha=0.5, tau=1.0, frame=F)
    with pytest.raises(ValueError):
        HelmholtzNeedleParams(lam=1.0, alpha=1.5, tau=1.0, frame=F)
    with pytest.raises(ValueError):
        HelmholtzNeedleParams(lam=1.0, alpha=0.5, tau=-1.0, frame=F)
