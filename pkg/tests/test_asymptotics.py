import math

import numpy as np
import pytest

from kpv.asymptotics import (RadiusGrid, ThresholdResult, kp_threshold,
                             laurent_fit, mean_width_difference,
                             reference_mean_width,
                             verify_capoyleas_pach, verify_csikos,
                             verify_lift_identity, verify_ww_proposition)
from kpv.ball_volumes import BallSystem
from kpv.configurations import PointConfiguration, random_expansion
from kpv.errors import GeometryError, InputError
from kpv.meanwidth import mean_width_exact_2d
from kpv.truncated_volume import FitWindow, unit_ball_volume

from conftest import random_config

SEGMENT = PointConfiguration.from_points([[0.0, 0.0], [1.0, 0.0]])
SQUARE = PointConfiguration.from_points([[0, 0], [1, 0], [1, 1], [0, 1]])


def test_laurent_fit_single_ball_is_exact_monomial():
    delta = unit_ball_volume(2)
    fit = laurent_fit(lambda r: delta * r * r, 2, 3, FitWindow(10.0, 1000.0))
    assert fit.coefficient(2) == pytest.approx(delta, rel=1e-6)
    assert fit.coefficient(1) == pytest.approx(0.0, abs=1e-6)


def test_laurent_fit_segment_union_and_intersection():
    system = BallSystem(SEGMENT, r_max=1010.0)
    win = FitWindow(10.0, 1000.0)
    fit_u = laurent_fit(system.union_volume, 2, 3, win)
    fit_i = laurent_fit(system.intersection_volume, 2, 3, win)
    assert fit_u.coefficient(1) == pytest.approx(2.0, rel=0.01)
    assert fit_i.coefficient(1) == pytest.approx(-2.0, rel=0.01)


def test_laurent_fit_rejects_too_many_terms():
    with pytest.raises(InputError):
        laurent_fit(lambda r: r * r, 2, 4, FitWindow(1.0, 10.0))


def test_laurent_fit_window_validation():
    with pytest.raises(InputError):
        FitWindow(5.0, 2.0).radii()


def test_reference_mean_width_planar_in_3d():
    flat = PointConfiguration.from_points(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    value, err, method = reference_mean_width(flat)
    # perimeter 4 lifted by c_{2,3} ~ pi/2
    assert value == pytest.approx(4.0 * math.pi / 2.0, rel=5e-3)
    assert method == "exact2d+lift"


def test_verify_capoyleas_pach_segment_and_square():
    for cfg, m in ((SEGMENT, 2.0), (SQUARE, 4.0)):
        rep = verify_capoyleas_pach(cfg)
        assert rep.passed
        assert rep.rhs == pytest.approx(m, rel=1e-9)
        assert rep.gap <= 0.01 * m


def test_verify_capoyleas_pach_single_point():
    one = PointConfiguration.from_points([[0.2, 0.4]])
    rep = verify_capoyleas_pach(one)
    assert rep.passed
    assert abs(rep.lhs) <= 1e-6 * unit_ball_volume(2)


def test_verify_csikos_segment():
    reports = verify_csikos(SEGMENT)
    assert all(r.passed for r in reports)
    inter = reports[0]
    assert inter.lhs == pytest.approx(-2.0, rel=0.01)


def test_verify_csikos_triangle_cancellation():
    tri = PointConfiguration.from_points(
        [[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
    reports = verify_csikos(tri)
    assert all(r.passed for r in reports)
    cancel = [r for r in reports if "vanishes" in r.claim][0]
    m = mean_width_exact_2d(tri).value
    assert cancel.gap <= 0.01 * m


def test_verify_csikos_single_point():
    one = PointConfiguration.from_points([[1.0, -2.0]])
    reports = verify_csikos(one)
    assert all(r.passed for r in reports)
    assert abs(reports[0].lhs) <= 1e-4


def test_verify_ww_two_points():
    d = 1.0
    rep = verify_ww_proposition(SEGMENT)
    assert rep.passed
    assert rep.gap <= 1e-3 * d


def test_verify_ww_triangle():
    tri = PointConfiguration.from_points([[0, 0], [1, 0], [0.4, 0.8]])
    rep = verify_ww_proposition(tri)
    assert rep.passed


def test_verify_ww_single_point():
    one = PointConfiguration.from_points([[0.0, 0.0]])
    rep = verify_ww_proposition(one)
    assert rep.passed and rep.gap == 0.0


def test_verify_ww_rejects_too_many_points():
    four = PointConfiguration.from_points([[0, 0], [1, 0], [0, 1], [1, 1]])
    with pytest.raises(GeometryError):
        verify_ww_proposition(four)


def test_verify_ww_rejects_degenerate():
    collinear = PointConfiguration.from_points([[0, 0], [1, 1], [2, 2]])
    with pytest.raises(GeometryError):
        verify_ww_proposition(collinear)


def test_verify_lift_identity_single_ball():
    one = PointConfiguration.from_points([[0.0, 0.0]])
    reports = verify_lift_identity(one, [2.0], samples=2_000_000, seed=12)
    for rep in reports:
        assert rep.passed
        assert rep.rhs == pytest.approx(math.pi * 4.0, rel=1e-9)


def test_verify_lift_identity_disjoint_pair():
    far = PointConfiguration.from_points([[0.0, 0.0], [40.0, 0.0]])
    reports = verify_lift_identity(far, [2.0], samples=2_000_000, seed=13)
    union = [r for r in reports if r.claim.startswith("union")][0]
    assert union.passed
    assert union.rhs == pytest.approx(2.0 * math.pi * 4.0, rel=1e-9)


def test_kp_threshold_scaled_square():
    q = PointConfiguration.from_points(1.1 * SQUARE.points)
    diam = q.diameter
    res = kp_threshold(SQUARE, q, RadiusGrid(diam, 400.0 * diam, 14))
    assert res.all_hold
    assert res.strictness_margin > 0.0
    assert res.margins.shape == (14, 4)


def test_kp_threshold_congruent_margin_zero():
    moved = PointConfiguration.from_points(SQUARE.points + np.array([4.0, -7.0]))
    res = kp_threshold(SQUARE, moved, RadiusGrid(1.0, 100.0, 6))
    assert res.congruent
    assert res.all_hold
    assert res.strictness_margin == 0.0
    assert np.all(res.margins == 0.0)


def test_kp_threshold_rejects_non_expansion():
    shrunk = PointConfiguration.from_points(0.5 * SQUARE.points)
    with pytest.raises(GeometryError):
        kp_threshold(SQUARE, shrunk, RadiusGrid(1.0, 10.0, 4))


def test_kp_threshold_random_expansion(rng):
    p = random_config(rng, 2, 5)
    q = random_expansion(p, seed=77, magnitude=0.2)
    diam = max(p.diameter, q.diameter)
    res = kp_threshold(p, q, RadiusGrid(diam, 500.0 * diam, 12))
    assert res.all_hold
    assert res.strictness_margin > 0.0
    assert res.r0 <= res.checked_grid[-1]


def test_threshold_report_surfaces_small_r_failures():
    # the scan must tolerate inequalities failing below r0: negative margins
    # stay visible in the table while r0 moves up the grid (the boundary
    # inequalities genuinely can fail at small radii)
    radii = np.geomspace(1.0, 100.0, 5)
    margins = np.array([[0.3, -0.2, 0.1, 0.1],
                        [0.3, 0.2, -0.05, 0.1],
                        [0.3, 0.2, 0.1, 0.1],
                        [0.4, 0.3, 0.2, 0.1],
                        [0.5, 0.3, 0.2, 0.2]])
    holds = np.all(margins >= -1e-12, axis=1)
    suffix_ok = np.flip(np.logical_and.accumulate(np.flip(holds)))
    i0 = int(np.argmax(suffix_ok))
    res = ThresholdResult(r0=float(radii[i0]), checked_grid=radii,
                          all_hold=bool(np.all(margins[:, :2] >= -1e-12)),
                          strictness_margin=float(np.min(margins[i0:])),
                          margins=margins)
    assert res.r0 == pytest.approx(radii[2])
    assert not res.all_hold                      # volume inequality failed once
    assert np.any(res.margins < 0)               # failures stay visible
    assert res.strictness_margin > 0.0           # margin measured beyond r0
    d = res.to_dict()
    assert d["r0"] == res.r0 and len(d["margins"]) == 5


def test_mean_width_difference_correlated_error():
    from kpv.asymptotics import mean_width_difference
    p = PointConfiguration.from_points([[0, 0, 0], [1, 0, 0]])
    q = PointConfiguration.from_points([[0, 0, 0], [1.0 + 1e-8, 0, 0]])
    diff, err = mean_width_difference(p, q)
    # both sides share the lifting constant, so a 1e-8 stretch is resolvable
    assert diff == pytest.approx(math.pi * 1e-8, rel=5e-3)
    assert err < diff
    # planar exact case has no constant at all
    p2 = PointConfiguration.from_points([[0, 0], [1, 0]])
    q2 = PointConfiguration.from_points([[0, 0], [2, 0]])
    d2, e2 = mean_width_difference(p2, q2)
    assert d2 == pytest.approx(2.0, rel=1e-12)
    assert e2 <= 1e-10


def test_union_coefficient_monotone_under_expansion(rng):
    # the fitted second coefficient inherits the mean-width growth
    p = random_config(rng, 2, 5)
    q = random_expansion(p, seed=55, magnitude=0.35)
    win = FitWindow(10.0 * max(p.diameter, q.diameter),
                    1000.0 * max(p.diameter, q.diameter))
    ap = laurent_fit(BallSystem(p, r_max=win.r_max * 1.01).union_volume, 2, 3, win)
    aq = laurent_fit(BallSystem(q, r_max=win.r_max * 1.01).union_volume, 2, 3, win)
    diff, err = mean_width_difference(p, q)
    fit_tol = 0.01 * max(abs(ap.coefficient(1)), abs(aq.coefficient(1)))
    if diff > 2 * fit_tol:
        assert aq.coefficient(1) - ap.coefficient(1) > 0
