import math

import numpy as np
import pytest

from folia.errors import NormalizationError, OutsideDomainError
from folia.fields import (
    BumpField,
    Chart,
    ExprField,
    ExprFormField,
    FramedScene,
    SigmaLocus,
    VectorField,
    eta,
    exterior_derivative,
    gauge_transform,
    lie_derivative,
)

TWO_PI = 2 * math.pi


def torus():
    return Chart(["x", "y", "z"], [[0, TWO_PI]] * 3, periodic=[True] * 3)


def test_exterior_derivative_basic():
    chart = torus()
    xdy = ExprFormField.parse(chart, 1, ["0", "x", "0"])
    pts = chart.sample_points(32, 1)
    d = exterior_derivative(xdy).eval_jets(pts, 0).values()
    assert np.allclose(d[0], 1.0) and np.allclose(d[1:], 0.0)  # dx^dy


def test_d_squared_vanishes_at_random_points():
    chart = torus()
    f = ExprFormField.parse(chart, 1, ["sin(x*y/4)", "0", "x"])
    pts = chart.sample_points(100, 2)
    dd = exterior_derivative(exterior_derivative(f)).eval_jets(pts, 0).values()
    assert np.max(np.abs(dd)) < 1e-11


def test_reeb_form_derivative_closed_form(reeb_profile):
    from folia import reeb

    sc = reeb.reeb_scene(reeb_profile)
    pts = sc.sample_points(64)
    dom = exterior_derivative(sc.omega).eval_jets(pts, 0).values()
    mu, mup = reeb_profile.mu_derivs(pts[0], 1)
    # d omega = -mu' sin(mu) dr ^ dt; components ((r,th),(r,t),(th,t))
    assert np.max(np.abs(dom[1] - (-mup * np.sin(mu)))) < 1e-12
    assert np.max(np.abs(dom[0])) < 1e-14 and np.max(np.abs(dom[2])) < 1e-14


def test_cartan_formula_by_hand():
    chart = torus()
    a = ExprFormField.parse(chart, 1, ["0", "x", "0"])  # x dy
    T = VectorField.parse(chart, ["1", "0", "0"])
    pts = chart.sample_points(16, 3)
    lt = lie_derivative([T], a).eval_jets(pts, 0).values()
    assert np.allclose(lt[0], 0.0) and np.allclose(lt[1], 1.0) and np.allclose(lt[2], 0.0)


def test_eta_equals_signed_lie_derivative(tilted, q2_scene, reeb_sc):
    for sc in (tilted, q2_scene, reeb_sc):
        pts = sc.sample_points(64)
        ej = sc.eta_form().eval_jets(pts, 0).values()
        lt = lie_derivative(sc.frame, sc.omega).eval_jets(pts, 0).values()
        sign = (-1.0) ** (sc.q - 1)
        assert np.max(np.abs(ej - sign * lt)) < 1e-10


def test_lie_derivative_commutation_sign_q2(q2_scene):
    # d L_T = (-1)^(q+1) L_T d; the naive (-1)^q sign fails for q = 2
    sc = q2_scene
    pts = sc.sample_points(32)
    rnd = ExprFormField.parse(
        sc.chart, 2,
        ["sin(x+u)", "0.3*cos(v)", "0", "0.2", "sin(z)*cos(y)",
         "0", "0.1*sin(v)", "cos(x)", "0", "0.4*sin(u+v)"],
    )
    lhs = exterior_derivative(lie_derivative(sc.frame, rnd)).eval_jets(pts, 0).values()
    rhs = lie_derivative(sc.frame, exterior_derivative(rnd)).eval_jets(pts, 0).values()
    assert np.max(np.abs(lhs - (-1.0) ** (sc.q + 1) * rhs)) < 1e-9


def test_eta_closed_forms(tilted, contact, reeb_sc, reeb_profile):
    pts = tilted.sample_points(64)
    ej = eta(tilted).eval_jets(pts, 0).values()
    want = np.stack([-np.sin(pts[2]), np.cos(pts[2]), np.zeros(pts.shape[1])])
    assert np.max(np.abs(ej - want)) < 1e-12

    ej = eta(contact).eval_jets(pts, 0).values()
    assert np.max(np.abs(ej)) < 1e-13

    rpts = reeb_sc.sample_points(64)
    ej = eta(reeb_sc).eval_jets(rpts, 0).values()
    mu, mup = reeb_profile.mu_derivs(rpts[0], 1)
    want = np.stack([mup * np.sin(mu) * np.cos(mu),
                     np.zeros_like(mu), mup * np.sin(mu) ** 2])
    assert np.max(np.abs(ej - want)) < 1e-10


def test_gauge_identity_transform(tilted):
    same = gauge_transform(tilted, [[1.0]])
    pts = tilted.sample_points(32)
    a = same.eta_form().eval_jets(pts, 0).values()
    b = tilted.eta_form().eval_jets(pts, 0).values()
    assert np.max(np.abs(a - b)) < 1e-12


def test_gauge_constant_rescale_keeps_eta(tilted):
    g2 = gauge_transform(tilted, [[2.5]])
    pts = tilted.sample_points(32)
    a = g2.eta_form().eval_jets(pts, 0).values()
    b = tilted.eta_form().eval_jets(pts, 0).values()
    assert np.max(np.abs(a - b)) < 1e-14
    assert g2.check_normalization() < 1e-12


def test_gauge_with_flow_constant_factor(tilted):
    # c constant along T: eta changes by the exact differential of log c,
    # eta_new = eta + d log c (q = 1)
    chart = tilted.chart
    cexpr = "2 + 0.3*sin(x - sin(z)) + 0.2*cos(y + cos(z))"
    cf = ExprField.parse(cexpr, chart)
    pts = tilted.sample_points(128)
    cj = cf.eval_jets(chart, pts, 1)
    Tj = tilted.frame[0].eval_jets(pts, 0).values()
    assert np.max(np.abs((Tj * cj.gradient()).sum(axis=0))) < 1e-13  # T(c) = 0

    g2 = gauge_transform(tilted, [[cf]])
    assert g2.check_normalization() < 1e-9
    eta_new = g2.eta_form().eval_jets(pts, 0).values()
    eta_old = tilted.eta_form().eval_jets(pts, 0).values()
    dlogc = cj.gradient() / cj.value
    assert np.max(np.abs(eta_new - (eta_old + dlogc))) < 1e-9


def test_gauge_q2_flow_constant_sign(q2_scene):
    # for q = 2 the change is eta - d log det C when T_i(det C) = 0
    sc = q2_scene
    chart = sc.chart
    # c must be annihilated by both transverse fields (components on x, z, y)
    cf = ExprField.parse("2 + 0.2*sin(u) + 0.1*cos(v)", chart)
    C = [[cf, 0.0], [0.0, 1.0]]
    pts = sc.sample_points(64)
    g2 = gauge_transform(sc, C)
    assert g2.check_normalization() < 1e-9
    eta_new = g2.eta_form().eval_jets(pts, 0).values()
    eta_old = sc.eta_form().eval_jets(pts, 0).values()
    cj = cf.eval_jets(chart, pts, 1)
    dlogc = cj.gradient() / cj.value
    sign = (-1.0) ** (sc.q + 1)
    assert np.max(np.abs(eta_new - (eta_old + sign * dlogc))) < 1e-9


def test_normalization_validation():
    chart = torus()
    omega = ExprFormField.parse(chart, 1, ["cos(z)", "sin(z)", "0"])
    bad_T = VectorField.parse(chart, ["2*cos(z)", "sin(z)", "1"])
    sc = FramedScene(chart, omega, [bad_T])
    with pytest.raises(NormalizationError):
        sc.check_normalization()


def test_singular_set_rejected():
    chart = Chart(
        ["r", "t", "s"],
        [[0.0, 1.0], [0, TWO_PI], [0, TWO_PI]],
        periodic=[False, True, True],
        sigma=[SigmaLocus(0, 0.0, 2)],
    )
    f = ExprFormField.parse(chart, 1, ["r", "0", "0"])
    good = np.array([[0.5], [1.0], [1.0]])
    f.eval_jets(good, 0)
    bad = np.array([[0.0], [1.0], [1.0]])
    with pytest.raises(OutsideDomainError):
        f.eval_jets(bad, 0)


def test_sample_points_deterministic_and_excludes_tube():
    chart = Chart(
        ["r", "t", "s"],
        [[0.0, 1.0], [0, TWO_PI], [0, TWO_PI]],
        periodic=[False, True, True],
        sigma=[SigmaLocus(0, 0.0, 2)],
    )
    a = chart.sample_points(64, 5)
    b = chart.sample_points(64, 5)
    c = chart.sample_points(64, 6)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.min(a[0]) > 1e-3  # outside the sigma tube


def test_bump_field_support_and_smoothness():
    chart = torus()
    b = BumpField(chart, [3.0, 3.0, 3.0], [2.0, 2.0, 2.0])
    pts = chart.sample_points(200, 8)
    j = b.eval_jets(chart, pts, 3)
    assert not np.any(np.isnan(j.coeffs))
    outside = np.max(np.abs(pts - 3.0), axis=0) > 2.0
    if np.any(outside):
        assert np.max(np.abs(j.coeffs[:, outside])) == 0.0
    inside = ~outside
    assert np.max(j.value[inside]) > 0.0


def test_jet_order_fail_fast():
    from folia import gallery, invariants as inv
    from folia.errors import JetOrderError

    shallow = gallery.t3_tilted(jet_order=2)
    shallow.declared["integrable_ker"] = True
    with pytest.raises(JetOrderError):
        shallow.eval_pack(shallow.sample_points(4), 3)
