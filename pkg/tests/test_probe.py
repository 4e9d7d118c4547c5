"""Indicator sequences, classification, direct indicator, cone energies, scan."""

import numpy as np
import pytest

from needleprobe.forward2d import dtn_assemble
from needleprobe.geometry import Circle, Geometry2
from needleprobe.probe import (
    BallRegion,
    ConeRegion,
    Direction2,
    Needle,
    Verdict,
    VerdictParams,
    classify,
    cone_energy_growth,
    exit_distance,
    indicator_function_direct,
    indicator_sequence,
    indicator_sequence_from_dtn,
    make_scan_schedule,
    scan_reconstruct,
)

RHO = 0.4
GEOM = Geometry2(outer=Circle(), cavities=[Circle(0.0, 0.0, RHO)])
GEOM0 = Geometry2(outer=Circle())


@pytest.fixture(scope="module")
def dtn_pair():
    lam0 = dtn_assemble(GEOM0, n_modes=32)
    lam_d = dtn_assemble(GEOM, n_modes=32)
    return lam0, lam_d


def test_classify_examples():
    p = VerdictParams(theta_cap=100.0)
    assert classify([1, 1, 1, 1, 1, 1], p) is Verdict.BOUNDED
    assert classify([2.0**n for n in range(8)], p) is Verdict.BLOW_UP  # exceeds cap
    assert classify([2.0**n for n in range(6)], VerdictParams(theta_cap=1e9)) is Verdict.BLOW_UP
    assert classify([1, 2], p) is Verdict.INCONCLUSIVE  # too short by rule
    # contracting increments certify a Cauchy tail
    vals = 10.0 - 2.0 ** (-np.arange(8.0))
    assert classify(vals, p) is Verdict.BOUNDED
    # expanding but slow increments: inconclusive
    vals = np.cumsum(1.05 ** np.arange(8.0))
    assert classify(vals, VerdictParams(theta_cap=1e9)) is Verdict.INCONCLUSIVE


def test_empty_cavity_trace_is_zero(dtn_pair):
    lam0, _ = dtn_pair
    needle = Needle((0.5, 0.1), Direction2((1.0, 0.0)))
    sched = make_scan_schedule(needle.tip, needle.direction, n_max=8)
    tr = indicator_sequence_from_dtn(lam0, lam0, needle, sched,
                                     params=VerdictParams(theta_cap=1.0))
    assert np.all(tr.values == 0)
    assert tr.verdict is Verdict.BOUNDED


def test_bounded_trace_matches_direct_indicator(dtn_pair):
    lam0, lam_d = dtn_pair
    from needleprobe.forward2d import assemble_system

    system = assemble_system(GEOM)
    for r in (0.75, 0.85):
        needle = Needle((r, 0.0), Direction2((1.0, 0.0)))
        sched = make_scan_schedule(needle.tip, needle.direction, n_max=12)
        tr = indicator_sequence_from_dtn(lam0, lam_d, needle, sched)
        i_direct = indicator_function_direct(GEOM, needle.tip, system=system)
        v = np.abs(tr.values)
        assert abs(v[-1] - v[-2]) / v[-1] < 0.05
        assert abs(v[-1] - i_direct) <= 0.05 * i_direct


def test_blowup_trace_through_cavity(dtn_pair):
    lam0, lam_d = dtn_pair
    needle = Needle((0.7, 0.0), Direction2((-1.0, 0.0)))
    sched = make_scan_schedule(needle.tip, needle.direction, n_max=12)
    tr = indicator_sequence_from_dtn(lam0, lam_d, needle, sched)
    v = np.abs(tr.values)
    assert np.all(np.diff(v) > 0)
    assert v[-1] > 1e3 * v[0]
    assert classify(tr.values, VerdictParams(theta_cap=1e4 * v[0])) is Verdict.BLOW_UP


def test_threshold_monotonicity_on_pipeline_traces(dtn_pair):
    # enlarging theta_cap never flips BlowUp -> Bounded on scan traces
    lam0, lam_d = dtn_pair
    traces = []
    for tip, dvec in [((0.7, 0.0), (-1, 0)), ((0.0, 0.0), (1, 0)), ((0.8, 0.0), (1, 0)),
                      ((0.5, 0.5), (0, 1)), ((0.2, 0.0), (0, 1))]:
        d = Direction2.from_vector(dvec)
        sched = make_scan_schedule(tip, d, n_max=12)
        traces.append(indicator_sequence_from_dtn(lam0, lam_d, Needle(tip, d), sched).values)
    for vals in traces:
        for theta in (1e2, 1e4, 1e6, 1e8):
            v1 = classify(vals, VerdictParams(theta_cap=theta))
            v2 = classify(vals, VerdictParams(theta_cap=10 * theta))
            assert not (v1 is Verdict.BLOW_UP and v2 is Verdict.BOUNDED)


def test_indicator_sequence_geometry_route():
    needle = Needle((0.8, 0.0), Direction2((1.0, 0.0)))
    sched = make_scan_schedule(needle.tip, needle.direction, n_max=8)
    tr = indicator_sequence(GEOM, needle, sched, params=VerdictParams(theta_cap=1e6))
    assert tr.values.shape == (8,)
    assert np.all(np.isfinite(tr.values))


def test_direct_indicator_properties():
    from needleprobe.forward2d import assemble_system

    system = assemble_system(GEOM)
    # empty cavity: identically zero
    assert indicator_function_direct(GEOM0, (0.3, 0.2)) == 0.0
    # grows monotonically approaching the cavity boundary (A.3)
    vals = [indicator_function_direct(GEOM, (RHO + d, 0.0), system=system)
            for d in (0.2, 0.1, 0.05)]
    assert vals[0] < vals[1] < vals[2]
    # bounded on a far grid (A.2)
    far = [indicator_function_direct(GEOM, (x, y), system=system)
           for x in (-0.8, 0.8) for y in (-0.2, 0.2)]
    assert max(far) < 50.0
    # domain error inside the cavity closure
    with pytest.raises(ValueError):
        indicator_function_direct(GEOM, (0.1, 0.0), system=system)


def test_direct_indicator_positivity_parts():
    # both defining integrals are nonnegative; total exceeds the G-energy part
    from needleprobe.forward2d import assemble_system

    system = assemble_system(GEOM)
    x = np.array([0.7, 0.1])
    total = indicator_function_direct(GEOM, x, system=system)
    mesh = system.cavities[0]
    w = (mesh.pts[:, 0] + 1j * mesh.pts[:, 1]) - complex(*x)
    nu = mesh.normal[:, 0] + 1j * mesh.normal[:, 1]
    g_energy = float(np.real(np.sum(np.conj(1.0 / w) * (-nu / w**2) * mesh.weights)))
    assert g_energy > 0
    assert total >= g_energy > 0


def test_cone_energy_growth():
    needle = Needle((0.0, 0.0), Direction2((1.0, 0.0)))
    sched = make_scan_schedule(needle.tip, needle.direction, n_max=10,
                               trace_budget=1e5)
    cone = ConeRegion(vertex=(0.0, 0.0), axis=needle.direction, half_angle=0.5, radius=0.6)
    rep = cone_energy_growth(sched, needle, cone, n_max=10)
    assert rep.passed
    # ball centered mid-needle grows too (Lemma 2.2 behavior)
    ball = BallRegion(center=(0.4, 0.0), radius=0.2)
    rep_ball = cone_energy_growth(sched, needle, ball, n_max=10)
    assert rep_ball.passed
    # compact region off the needle: energies converge (no unbounded growth)
    off = BallRegion(center=(-0.5, 0.0), radius=0.2)
    rep_off = cone_energy_growth(sched, needle, off, n_max=10)
    e = np.asarray(rep_off.energies)
    assert abs(e[-1] - e[-2]) < 0.05 * e[-1]
    # and they approach the finite G-energy over that region
    from needleprobe.needle2d import g_singular_grad

    xs = np.linspace(-1, 1, 200)
    X, Y = np.meshgrid(xs, xs)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    m = off.mask(pts) & (np.linalg.norm(pts, axis=1) < 1)
    wpt = pts[m, 0] + 1j * pts[m, 1]
    g1, g2 = g_singular_grad(wpt)
    cell = (xs[1] - xs[0]) ** 2
    g_energy = float(np.sum(np.abs(g1) ** 2 + np.abs(g2) ** 2) * cell)
    assert e[-1] == pytest.approx(g_energy, rel=0.02)


def test_exit_distance():
    d = Direction2((1.0, 0.0))
    assert exit_distance((0.0, 0.0), d) == pytest.approx(1.0)
    assert exit_distance((0.5, 0.0), d) == pytest.approx(0.5)
    assert exit_distance((0.5, 0.0), Direction2((-1.0, 0.0))) == pytest.approx(1.5)


def test_schedule_shape():
    sched = make_scan_schedule((0.3, 0.1), Direction2.from_angle(0.4), n_max=12)
    sched.validate()
    assert len(sched) == 12
    assert sched.taus[-1] > sched.taus[0]
    assert sched.alphas[0] <= 0.9


def test_scan_reconstruct_existential_monotonicity(dtn_pair):
    # more directions can only move tips from inside to outside verdicts
    lam0, lam_d = dtn_pair
    res4 = scan_reconstruct(lam0, lam_d, nx=9, ny=9, n_directions=4, n_max=10,
                            keep_traces=False)
    res8 = scan_reconstruct(lam0, lam_d, nx=9, ny=9, n_directions=8, n_max=10,
                            keep_traces=False)
    flip_wrong = res4.outside_cavity & ~res8.outside_cavity
    assert not flip_wrong.any()


def test_scan_reconstruct_soundness(dtn_pair):
    lam0, lam_d = dtn_pair
    res = scan_reconstruct(lam0, lam_d, nx=17, ny=17, n_directions=8, n_max=12,
                           keep_traces=False)
    X, Y = np.meshgrid(res.xs, res.ys)
    R = np.hypot(X, Y)
    cell = res.xs[1] - res.xs[0]
    scanned = res.inside_domain
    # no tip deeper than 3 cells inside D classified outside, none farther
    # than 3 cells outside classified inside
    deep_inside = scanned & (R < RHO - 3 * cell)
    far_outside = scanned & (R > RHO + 3 * cell)
    assert not (deep_inside & res.outside_cavity).any()
    assert (far_outside & res.outside_cavity).all()
