import math

import numpy as np
import pytest

from folia import geometry as geo
from folia.errors import UndefinedFrameError
from folia.fields import (
    Chart,
    ExprFormField,
    FramedScene,
    JetForm,
    MetricField,
    VectorField,
    exterior_derivative,
)
from folia.jets import Jet

TWO_PI = 2 * math.pi


def test_euclidean_christoffel_vanishes(helix):
    pts = helix.chart.sample_points(8, 1)
    con = geo.connection(helix, pts)
    assert np.max(np.abs(con.gamma)) < 1e-14


def test_polar_christoffel_textbook_values():
    chart = Chart(["r", "th", "z"], [[0.5, 2], [0, TWO_PI], [0, 1]],
                  periodic=[False, True, False])
    g = MetricField.parse(chart, [["1", "0", "0"], ["0", "r^2", "0"], ["0", "0", "1"]])
    om = ExprFormField.parse(chart, 1, ["0", "0", "1"])
    T = VectorField.parse(chart, ["0", "0", "1"])
    sc = FramedScene(chart, om, [T], metric=g)
    pts = chart.sample_points(16, 3)
    con = geo.connection(sc, pts)
    r = pts[0]
    assert np.max(np.abs(con.gamma[0, 1, 1] + r)) < 1e-12
    assert np.max(np.abs(con.gamma[1, 0, 1] - 1 / r)) < 1e-12


def test_levi_civita_metric_and_torsion_free():
    chart = Chart(["x", "y", "z"], [[0, TWO_PI]] * 3, periodic=[True] * 3)
    g = MetricField.parse(chart, [
        ["2 + 0.3*sin(x+y)", "0.1*cos(z)", "0"],
        ["0.1*cos(z)", "1.5 + 0.2*cos(y)", "0.05*sin(x)"],
        ["0", "0.05*sin(x)", "1 + 0.1*sin(z)"],
    ])
    om = ExprFormField.parse(chart, 1, ["0", "0", "1"])
    T = VectorField.parse(chart, ["0", "0", "1"])
    sc = FramedScene(chart, om, [T], metric=g)
    pts = chart.sample_points(32, 4)
    ctx = geo.GeometryContext(sc, pts, order=3)
    n = 3
    # torsion-free: symmetry in the lower indices
    for k in range(n):
        for i in range(n):
            for j in range(i):
                d = ctx.gamma[k][i][j] - ctx.gamma[k][j][i]
                assert np.max(np.abs(np.asarray(d.value))) < 1e-12
    # metricity: d_k g_ij = Gamma^m_ki g_mj + Gamma^m_kj g_im
    for k in range(n):
        for i in range(n):
            for j in range(n):
                dk = ctx.g[i][j].diff(k)
                acc = None
                for m in range(n):
                    t = ctx.gamma[m][k][i] * ctx.g[m][j] + ctx.gamma[m][k][j] * ctx.g[i][m]
                    acc = t if acc is None else acc + t
                resid = dk - acc
                assert np.max(np.abs(np.asarray(resid.value))) < 1e-9


def test_straight_field_outside_u():
    chart = Chart(["x", "y", "z"], [[0, 1]] * 3)
    g = MetricField.parse(chart, [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
    om = ExprFormField.parse(chart, 1, ["0", "0", "1"])
    T = VectorField.parse(chart, ["0", "0", "1"])
    sc = FramedScene(chart, om, [T], metric=g)
    pts = chart.sample_points(8, 5)
    ctx = geo.GeometryContext(sc, pts)
    assert not np.any(ctx.u_mask())
    with pytest.raises(UndefinedFrameError):
        geo.extrinsic(sc, pts)


def test_helix_curvature_and_torsion(helix):
    pts = helix.chart.sample_points(32, 6)
    ext = geo.extrinsic(helix, pts, order=3)
    h = 0.7
    r2 = pts[0] ** 2 + pts[1] ** 2
    assert np.max(np.abs(ext.k - np.sqrt(r2) / (r2 + h * h))) < 1e-12
    assert np.max(np.abs(np.abs(ext.tau) - h / (r2 + h * h))) < 1e-12


def test_warped_product_mean_curvature():
    sc = geo.warped_product_scene(1, "exp(0.2*x0 + 0.1*x1^2)")
    assert sc.check_normalization() < 1e-12
    pts = sc.chart.sample_points(16, 9)
    ctx = geo.GeometryContext(sc, pts, 3)
    H = np.stack([np.asarray(c.value) for c in ctx.H])
    grad_log_phi = np.stack([0.2 * np.ones(pts.shape[1]), 0.2 * pts[1],
                             np.zeros(pts.shape[1])])
    assert np.max(np.abs(H + grad_log_phi)) < 1e-12


def test_twisted_product_parallel_mean_curvature_split():
    # phi = phi1(base) phi2(fiber): the mean curvature components do not
    # vary along the fibers; a non-product phi does vary
    prod = geo.twisted_product_scene(1, "exp(0.3*x0) * (1 + 0.2*sin(y1))")
    pts = prod.chart.sample_points(16, 10)
    ctx = geo.GeometryContext(prod, pts, 3)
    dH = [c.diff(2) for c in ctx.H]  # fiber direction is coordinate 2
    assert max(np.max(np.abs(np.asarray(d.value))) for d in dH) < 1e-12

    mixed = geo.twisted_product_scene(1, "exp(0.3*x0*(1 + 0.2*sin(y1)))")
    ctx2 = geo.GeometryContext(mixed, pts, 3)
    dH2 = [c.diff(2) for c in ctx2.H]
    assert max(np.max(np.abs(np.asarray(d.value))) for d in dH2) > 1e-3


def test_eta_metric_cross_pipeline(tilted, q2_scene, contact):
    for sc, tol in ((tilted, 1e-8), (q2_scene, 1e-8)):
        pts = sc.sample_points(100)
        ev = geo.eta_metric_values(sc, pts)
        direct = sc.eta_form().eval_jets(pts, 0).values()
        assert np.max(np.abs(ev - direct)) < tol
    pts = contact.sample_points(64)
    assert np.max(np.abs(geo.eta_metric_values(contact, pts))) < 1e-12


def test_eta_is_curvature_times_normal_flat(tilted):
    pts = tilted.sample_points(64)
    ctx = geo.GeometryContext(tilted, pts)
    k = np.asarray(ctx.normH.value)
    Nflat = geo.eta_metric_values(tilted, pts)  # (-1)^0 (H)flat = k N_flat
    n_comps = np.stack([
        np.asarray(sum(ctx.g[i][j] * ctx.N[j] for j in range(3)).value)
        for i in range(3)
    ])
    assert np.max(np.abs(Nflat - k * n_comps)) < 1e-12


def _frame_vectors(ctx):
    Tv = JetForm(ctx.n, 1, ctx.Ts[0], "contra")
    Nv = JetForm(ctx.n, 1, ctx.N, "contra")
    Bv = JetForm(ctx.n, 1, ctx.B[0], "contra")
    return Tv, Nv, Bv


def test_d_eta_table_against_direct(tilted, q2_scene):
    for sc, tol in ((tilted, 1e-7), (q2_scene, 1e-7)):
        pts = sc.sample_points(64)
        ctx = geo.GeometryContext(sc, pts)
        tab = geo.d_eta_table(sc, pts)
        deta = exterior_derivative(sc.eta_form()).eval_jets(pts, 0)

        def direct(X, Y):
            v = deta.evaluate([X, Y])
            return np.asarray(v.value if isinstance(v, Jet) else v)

        def vec(comps):
            return JetForm(sc.chart.dim, 1, comps, "contra")

        q = sc.q
        for i in range(q):
            for j in range(q):
                assert np.max(np.abs(tab[("T,B", i, j)]
                                     - direct(vec(ctx.Ts[i]), vec(ctx.B[j])))) < tol
                assert np.max(np.abs(tab[("B,B", i, j)]
                                     - direct(vec(ctx.B[i]), vec(ctx.B[j])))) < tol
                assert np.max(np.abs(tab[("T,T", i, j)]
                                     - direct(vec(ctx.Ts[i]), vec(ctx.Ts[j])))) < tol
            assert np.max(np.abs(tab[("N,B", i)]
                                 - direct(vec(ctx.N), vec(ctx.B[i])))) < tol
            assert np.max(np.abs(tab[("T,N", i)]
                                 - direct(vec(ctx.Ts[i]), vec(ctx.N)))) < tol


def test_d_eta_integrable_normal_vanishing_pairs(q2_scene):
    # the transverse frame of the q2 scene is coordinate (integrable), so
    # d eta(T_i, T_j) = 0
    pts = q2_scene.sample_points(64)
    tab = geo.d_eta_table(q2_scene, pts)
    for i in range(2):
        for j in range(2):
            assert np.max(np.abs(tab[("T,T", i, j)])) < 1e-9


def test_curl_identity_for_mean_curvature(tilted):
    # d eta(X, Y) = (-1)^(q-1) (<nabla_X H, Y> - <nabla_Y H, X>)
    pts = tilted.sample_points(64)
    ctx = geo.GeometryContext(tilted, pts)
    deta = exterior_derivative(tilted.eta_form()).eval_jets(pts, 0)
    rng = np.random.default_rng(2)
    space = ctx.N[0].space
    for _ in range(3):
        X = [Jet.constant(space, rng.normal(), pts.shape[1:]) for _ in range(3)]
        Y = [Jet.constant(space, rng.normal(), pts.shape[1:]) for _ in range(3)]
        lhs = deta.evaluate([JetForm(3, 1, X, "contra"), JetForm(3, 1, Y, "contra")])
        lhs = np.asarray(lhs.value if isinstance(lhs, Jet) else lhs)
        rhs = (ctx.dot(ctx.nabla(X, ctx.H), Y) - ctx.dot(ctx.nabla(Y, ctx.H), X)).value
        assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_gv_density_formula(tilted, q2_scene, contact):
    # direct (eta ^ (d eta)^q)(T, N, B) vs the mean-curvature determinant
    for sc in (tilted, q2_scene):
        pts = sc.sample_points(64)
        ctx = geo.GeometryContext(sc, pts)
        dens = geo.gv_density_metric(sc, pts)
        gvi = sc.gv_integrand().eval_jets(pts, 0)
        args = [JetForm(sc.chart.dim, 1, t, "contra") for t in ctx.Ts]
        args += [JetForm(sc.chart.dim, 1, ctx.N, "contra")]
        args += [JetForm(sc.chart.dim, 1, b, "contra") for b in ctx.B]
        direct = gvi.evaluate(args)
        direct = np.asarray(direct.value if isinstance(direct, Jet) else direct)
        assert np.max(np.abs(dens - direct)) < 1e-7
    # harmonic scene: density vanishes (U empty)
    pts = contact.sample_points(16)
    ctx = geo.GeometryContext(contact, pts)
    assert not np.any(ctx.u_mask())


def test_gv_density_q1_closed_form(tilted):
    pts = tilted.sample_points(64)
    ctx = geo.GeometryContext(tilted, pts)
    k, tau, N, B = ctx.frenet()
    h_bn = ctx.dot(ctx.nabla(ctx.B[0], ctx.N), ctx.Ts[0])
    closed = -(np.asarray(k.value) ** 2) * (np.asarray(tau.value) - np.asarray(h_bn.value))
    assert np.max(np.abs(geo.gv_density_metric(tilted, pts) - closed)) < 1e-10


def test_density_sigma_decomposition(tilted):
    pts = tilted.sample_points(64)
    ctx = geo.GeometryContext(tilted, pts)
    A1, A2 = geo.frame_matrices(ctx)
    dens = geo.gv_density_metric(tilted, pts)
    q = tilted.q
    for p in range(0, pts.shape[1], 7):
        mats = [A1[:, :, p], A2[:, :, p]]
        s = geo.sigma_sum(mats, q)
        want = -(np.asarray(ctx.normH.value)[p] ** (q + 1)) * s
        assert abs(dens[p] - want) < 1e-9


def test_sigma_invariants_examples():
    I2 = np.eye(2)
    assert abs(geo.sigma_invariants([I2, I2], (1, 1)) - 2.0) < 1e-14
    # single matrix: elementary symmetric functions of eigenvalues
    rng = np.random.default_rng(8)
    A = rng.normal(size=(3, 3))
    ev = np.linalg.eigvals(A)
    e1 = ev.sum().real
    e2 = (ev[0] * ev[1] + ev[0] * ev[2] + ev[1] * ev[2]).real
    e3 = np.prod(ev).real
    assert abs(geo.sigma_invariants([A], (1,)) - e1) < 1e-10
    assert abs(geo.sigma_invariants([A], (2,)) - e2) < 1e-10
    assert abs(geo.sigma_invariants([A], (3,)) - e3) < 1e-10


def test_sigma_sum_equals_det_of_sum():
    rng = np.random.default_rng(9)
    for _ in range(20):
        A1 = rng.normal(size=(3, 3))
        A2 = rng.normal(size=(3, 3))
        want = np.linalg.det(A1 + A2)
        got = geo.sigma_sum([A1, A2], 3)
        assert abs(got - want) < 1e-10 * max(1.0, abs(want))


def test_sigma_against_polynomial_fit_oracle():
    # independent oracle: fit the coefficient of t1^a t2^b by evaluating
    # det(I + t1 A1 + t2 A2) on a grid and solving for the coefficients
    rng = np.random.default_rng(10)
    A1 = rng.normal(size=(2, 2))
    A2 = rng.normal(size=(2, 2))
    ts = np.array([-2., -1., 0., 1., 2.])
    V = np.vander(ts, 3, increasing=True)
    P = np.empty((5, 5))
    for i, t1 in enumerate(ts):
        for j, t2 in enumerate(ts):
            P[i, j] = np.linalg.det(np.eye(2) + t1 * A1 + t2 * A2)
    C = np.linalg.lstsq(V, P, rcond=None)[0]
    C = np.linalg.lstsq(V, C.T, rcond=None)[0].T
    for a in range(3):
        for b in range(3):
            if a + b > 2:
                continue
            want = C[a, b]
            got = geo.sigma_invariants([A1, A2], (a, b))
            assert abs(got - want) < 1e-8


def test_extrinsic_frame_invariants(tilted, q2_scene):
    for sc in (tilted, q2_scene):
        pts = sc.sample_points(64)
        ctx = geo.GeometryContext(sc, pts)
        for t in ctx.Ts:
            assert np.max(np.abs(np.asarray(ctx.dot(ctx.N, t).value))) < 1e-10
        for i, bi in enumerate(ctx.B):
            assert np.max(np.abs(np.asarray(ctx.dot(bi, ctx.N).value))) < 1e-10
            for j, bj in enumerate(ctx.B):
                want = 1.0 if i == j else 0.0
                assert np.max(np.abs(np.asarray(ctx.dot(bi, bj).value) - want)) < 1e-10
        # integrability tensor is antisymmetric
        t12 = ctx.integrability_coeffs(ctx.N, ctx.B[0])
        t21 = ctx.integrability_coeffs(ctx.B[0], ctx.N)
        for a, b in zip(t12, t21):
            assert np.max(np.abs(np.asarray((a + b).value))) < 1e-12


def test_density_integral_matches_gv(tilted):
    # integrating the extrinsic density against dV_g recovers the invariant
    from folia.quadrature import QuadratureSpec, integrate_density

    def density(points):
        ctx = geo.GeometryContext(tilted, points, order=2)
        dens = geo.gv_density_metric(tilted, points, order=2)
        g = np.array([[np.asarray(ctx.g[i][j].value) for j in range(3)]
                      for i in range(3)])
        detg = np.linalg.det(np.moveaxis(g.reshape(3, 3, -1), -1, 0))
        return dens * np.sqrt(detg)

    val = np.asarray(integrate_density(density, tilted.chart,
                                       QuadratureSpec(resolution=16, error_check=False)).value)
    assert abs(val + (2 * math.pi) ** 3) < 1e-6 * (2 * math.pi) ** 3
