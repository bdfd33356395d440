"""Acceptance criteria, one test per criterion, each printing a PASS line.

Tolerances are pinned here and match the project contract; every expected
value is either exact arithmetic, an independently computed oracle (finite
differences, closed forms derived by hand), or a structural zero.
"""

import math
import time

import numpy as np
import pytest

from folia import gallery, geometry as geo, holomorphic as holo, invariants as inv, reeb
from folia.errors import FoliaError
from folia.fields import (
    BumpField,
    ExprField,
    ExprFormField,
    JetForm,
    VectorField,
    exterior_derivative,
    lie_derivative,
)
from folia.jets import Jet
from folia.quadrature import QuadratureSpec

TWO_PI = 2 * math.pi


def _report(n, text):
    print(f"ACCEPTANCE {n}: PASS - {text}")


def _trunc(jf, k):
    return jf.map(lambda c: c.truncated(k) if isinstance(c, Jet) else c)


# -- 1: identity battery ----------------------------------------------------------


def test_acceptance_01_identity_battery(tilted, q2_scene):
    t0 = time.time()
    worst = 0.0
    for sc in (tilted, q2_scene):
        q, n = sc.q, sc.chart.dim
        pts = sc.sample_points(256)
        pack = sc.eval_pack(pts, 3)

        # d compose d = 0 on omega and on a generic auxiliary form
        dd = pack.omega.d().d()
        worst = max(worst, float(np.max(np.abs(dd.values()))))
        aux_srcs = {

            1: ["sin(x*0 + y)", "cos(z)*sin(x)", "0.3*sin(x+z)"],
            2: ["sin(x+u)", "0.3*cos(v)", "sin(y)", "0.2*cos(z)", "sin(z)*cos(y)"],
        }[q]
        aux = ExprFormField.parse(sc.chart, 1, aux_srcs)
        aj = aux.eval_jets(pts, 2)
        worst = max(worst, float(np.max(np.abs(aj.d().d().values()))))

        # eta equals the signed Lie derivative of omega (Cartan relation)
        ej = sc.eta_form().eval_jets(pts, 0).values()
        lt = lie_derivative(sc.frame, sc.omega).eval_jets(pts, 0).values()
        worst = max(worst, float(np.max(np.abs(ej - (-1.0) ** (q - 1) * lt))))

        # d L_T = (-1)^(q+1) L_T d on a generic q-form
        gen = sc.omega
        lhs = exterior_derivative(lie_derivative(sc.frame, gen)).eval_jets(pts, 0).values()
        rhs = lie_derivative(sc.frame, exterior_derivative(gen)).eval_jets(pts, 0).values()
        worst = max(worst, float(np.max(np.abs(lhs - (-1.0) ** (q + 1) * rhs))))

        # full contraction = iterated single contractions, innermost first
        alpha = pack.omega.d()  # a (q+1)-form
        full = alpha.contract(_trunc(pack.Tmulti, alpha.order))
        single = alpha
        for Tv in pack.Ts:
            single = single.contract(_trunc(JetForm(n, 1, Tv.comps, "contra"), single.order))
        worst = max(worst, float(np.max(np.abs(full.values() - single.values()))))

        # contraction-wedge identity above the critical degree
        eta_j = alpha.contract(_trunc(pack.Tmulti, alpha.order))
        deta = eta_j.d()
        a_form = alpha  # degree q+1
        b_form = deta if q == 1 else deta.wedge(deta)  # degree 2 or 4: sum > n+q-1
        da, db = q + 1, 2 * (1 if q == 1 else 2)
        if da + db > n + q - 1 and da + db - q <= n:
            lhsw = a_form.contract(_trunc(pack.Tmulti, a_form.order)).wedge(b_form)
            rhsw = a_form.wedge(b_form.contract(_trunc(pack.Tmulti, b_form.order)))
            diff = lhsw.values() - (-1.0) ** (q * (da - 1)) * rhsw.values()
            worst = max(worst, float(np.max(np.abs(diff))))

    elapsed = time.time() - t0
    assert worst <= 1e-9
    assert elapsed < 10.0
    _report(1, f"identity battery sup residual {worst:.2e} in {elapsed:.1f}s")


# -- 2: the three eta pipelines agree ------------------------------------------------


def test_acceptance_02_eta_pipelines(tilted, q2_scene, helix, reeb_sc):
    worst = 0.0
    for sc in (tilted, q2_scene, helix, reeb_sc):
        pts = sc.sample_points(256)
        direct = sc.eta_form().eval_jets(pts, 0).values()
        lt = lie_derivative(sc.frame, sc.omega).eval_jets(pts, 0).values()
        sign = (-1.0) ** (sc.q - 1)
        worst = max(worst, float(np.max(np.abs(direct - sign * lt))))
        metric_side = geo.eta_metric_values(sc, pts)
        worst = max(worst, float(np.max(np.abs(direct - metric_side))))
    assert worst <= 1e-8
    _report(2, f"eta pipeline agreement sup {worst:.2e} across 4 compatible scenes")


# -- 3: Reeb scene closed form ---------------------------------------------------------


def test_acceptance_03_reeb_eta_and_gv(reeb_sc, reeb_profile):
    pts = reeb_sc.sample_points(256)
    ej = reeb_sc.eta_form().eval_jets(pts, 0).values()
    mu, mup = reeb_profile.mu_derivs(pts[0], 1)
    want = np.stack([mup * np.sin(mu) * np.cos(mu),
                     np.zeros_like(mu), mup * np.sin(mu) ** 2])
    err = float(np.max(np.abs(ej - want)))
    assert err <= 1e-10
    integrand = reeb_sc.gv_integrand().eval_jets(pts, 0).values()
    sup = float(np.max(np.abs(integrand)))
    assert sup <= 1e-10
    _report(3, f"Reeb eta closed-form err {err:.2e}; gv integrand sup {sup:.2e}")


# -- 4: tilted torus number -------------------------------------------------------------


def test_acceptance_04_tilted_gv_64_cubed(tilted):
    t0 = time.time()
    res = inv.gv_number(tilted, QuadratureSpec(resolution=64))
    elapsed = time.time() - t0
    rel = abs((float(np.asarray(res.value)) + TWO_PI**3) / TWO_PI**3)
    assert rel <= 1e-6
    assert elapsed < 30.0
    assert res.nodes == 64**3
    _report(4, f"gv = {float(np.asarray(res.value)):.6f} (rel err {rel:.1e}) in {elapsed:.1f}s")


# -- 5: variations vs finite differences -------------------------------------------------


def _case_i(scene, cexpr):
    chart = scene.chart
    cdf = ExprField.parse(cexpr, chart)

    from folia.fields import DerivedFormField, _coordinate_env

    def omega_dot_fn(points, order):
        om = scene.omega.eval_jets(points, order)
        c = cdf._from_env(_coordinate_env(chart, points, order))
        return om.map(lambda x: -(c * x))

    def omega_ddot_fn(points, order):
        om = scene.omega.eval_jets(points, order)
        c = cdf._from_env(_coordinate_env(chart, points, order))
        return om.map(lambda x: 2.0 * c * c * x)

    def t_dot_fn(points, order):
        T = scene.frame[0].eval_jets(points, order)
        c = cdf._from_env(_coordinate_env(chart, points, order))
        return JetForm(chart.dim, 1, [c * t for t in T.comps], "contra")

    class _V(DerivedFormField):
        def __init__(self, fn):
            super().__init__(chart, 1, fn)
            self.variance = "contra"

    return inv.VariationSpec(
        omega_dot=DerivedFormField(chart, 1, omega_dot_fn),
        omega_ddot=DerivedFormField(chart, 1, omega_ddot_fn),
        t_dots=[_V(t_dot_fn)],
        label=f"i:{cexpr}",
    )


def test_acceptance_05_variations(graph_a, graph_b, tilted):
    spec = QuadratureSpec(resolution=20, error_check=False)
    a, b = gallery.GRAPH_B

    batteries = {
        "i": [
            (graph_a, _case_i(graph_a, "0.2*sin(x)*cos(y+z)")),
            (tilted, _case_i(tilted, "0.25*sin(z)")),
            (graph_a, _case_i(graph_a, "0.1*cos(2*z) + 0.1*sin(x+y)")),
        ],
        "ii": [
            (graph_b, inv.VariationSpec(
                t_dots=[VectorField.parse(graph_b.chart,
                                          ["0", "sin(z)", f"-(sin(z))*({b})"])],
                label="ii-0")),
            (graph_b, inv.VariationSpec(
                t_dots=[VectorField.parse(graph_b.chart,
                                          ["cos(z)", "sin(z)",
                                           f"-(cos(z))*({a}) - (sin(z))*({b})"])],
                label="ii-1")),
            (tilted, inv.VariationSpec(
                t_dots=[VectorField.parse(tilted.chart,
                                          ["-sin(z)*cos(x)", "cos(z)*cos(x)", "sin(2*y)"])],
                label="ii-2")),
        ],
        "iii": [
            (graph_a, inv.VariationSpec(
                omega_dot=ExprFormField.parse(graph_a.chart, 1,
                                              ["cos(x)*sin(y+z)", "0", "0"]),
                label="iii-0")),
            (graph_a, inv.VariationSpec(
                omega_dot=ExprFormField.parse(graph_a.chart, 1,
                                              ["0.3*sin(x)", "cos(y)*sin(z)", "0"]),
                label="iii-1")),
            (tilted, inv.VariationSpec(
                omega_dot=ExprFormField.parse(tilted.chart, 1,
                                              ["-sin(z)*(1 + 0.5*sin(x))",
                                               "cos(z)*(1 + 0.5*sin(x))", "0"]),
                label="iii-2")),
        ],
    }
    lines = []
    nonzero_first = 0
    for case, battery in batteries.items():
        for sc, var in battery:
            var.check_admissible(sc)
            gv_scale = abs(float(np.asarray(inv.gv_number(sc, spec).value)))
            floor = max(1e-6 * max(gv_scale, 1.0), 1e-9)
            first, _ = inv.first_variation(sc, var, spec)
            fd1 = inv.finite_difference_gv(sc, var, spec, t=1e-3)
            rel1 = abs(first - fd1) / max(abs(fd1), floor)
            assert rel1 <= 1e-3, (case, var.label, first, fd1)
            if abs(fd1) > floor:
                nonzero_first += 1
            second, _ = inv.second_variation(sc, var, spec)
            fd2 = inv.finite_difference_gv(sc, var, spec, t=2e-3, order=2)
            rel2 = abs(second - fd2) / max(abs(fd2), floor)
            assert rel2 <= 1e-2, (case, var.label, second, fd2)
            lines.append(f"{case}/{var.label}: d1 rel {rel1:.1e}, d2 rel {rel2:.1e}")
    assert nonzero_first >= 3  # the battery is not vacuous
    _report(5, "; ".join(lines[:3]) + f" ... ({len(lines)} variations)")


# -- 6: index form symmetry ---------------------------------------------------------------


def test_acceptance_06_index_symmetry(tilted):
    chart = tilted.chart
    rng = np.random.default_rng(tilted.seed + 77)
    spec = QuadratureSpec(resolution=24, error_check=False)
    lo, wid = chart.box[:, 0], chart.widths
    worst = 0.0
    for k in range(10):
        c1 = lo + rng.uniform(0.25, 0.75, 3) * wid
        c2 = lo + rng.uniform(0.25, 0.75, 3) * wid
        b1, b2 = BumpField(chart, c1, 0.48 * wid), BumpField(chart, c2, 0.48 * wid)
        alpha = ExprFormField(chart, 1, [b1 * w for w in rng.normal(size=3)])
        beta = ExprFormField(chart, 1, [b2 * w for w in rng.normal(size=3)])
        jab, jba, _ = inv.index_form_pair(tilted, alpha, beta, spec)
        defect = abs(jab - jba) / max(abs(jab), 1.0)
        worst = max(worst, defect)
        assert defect <= 1e-6
    _report(6, f"index symmetry worst defect {worst:.2e} over 10 seeded pairs")


# -- 7: the blow-up family -----------------------------------------------------------------


def test_acceptance_07_blowup_family():
    slopes = (0.125, 0.25, 0.375, 0.5, 0.625)
    r0s = []
    for a1 in slopes:
        t0 = time.time()
        prof = reeb.solve_cond2(1.0, a1, 0.0)
        elapsed = time.time() - t0
        resid = float(np.max(np.abs(prof.cond_a1_residual())))
        assert resid <= 1e-6
        assert np.isfinite(prof.r0) and prof.r0 > 0
        assert elapsed < 5.0
        r0s.append(prof.r0)
    # tolerance halving moves the blow-up radius by less than 1e-4 relative
    tight = reeb.solve_cond2(1.0, 0.25, 0.0, rtol=5e-11, atol=5e-13)
    drift = abs(tight.r0 - r0s[1]) / r0s[1]
    assert drift <= 1e-4
    _report(7, "r0 = " + ", ".join(f"{r:.6f}" for r in r0s)
            + f"; tolerance-halving drift {drift:.1e}")


# -- 8: reduced-branch first integral ---------------------------------------------------------


def test_acceptance_08_first_integral():
    worst = 0.0
    for tildeA0, a1 in [(0.5, 0.25), (1.0, 0.4), (0.25, 0.7)]:
        prof = reeb.solve_reduced(tildeA0, a1)
        worst = max(worst, prof.first_integral_drift())
    assert worst <= 1e-8
    _report(8, f"first-integral drift sup {worst:.2e} over 3 reduced profiles")


# -- 9: criticality along solved profiles ------------------------------------------------------


def test_acceptance_09_profile_criticality(reeb_sc, reeb_profile):
    rng = np.random.default_rng(5)
    mask = (reeb_profile.rs > 0.02) & (reeb_profile.rs < reeb_sc.chart.box[0, 1])
    rsel = reeb_profile.rs[mask][::5]
    pts = np.stack([rsel, rng.uniform(0, TWO_PI, len(rsel)),
                    rng.uniform(0, TWO_PI, len(rsel))])
    rep = inv.criticality_residual(reeb_sc, points=pts)
    assert rep.sup <= 1e-5

    prof3 = reeb.solve_cond3(1.0, 0.25, 0.1, 0.0)
    sc3 = reeb.reeb_scene(prof3)
    m3 = (prof3.rs > 0.02) & (prof3.rs < sc3.chart.box[0, 1]) & (np.abs(prof3.ys[:, 1]) < 1e3)
    rsel3 = prof3.rs[m3][::7]
    pts3 = np.stack([rsel3, rng.uniform(0, TWO_PI, len(rsel3)),
                     rng.uniform(0, TWO_PI, len(rsel3))])
    rep3 = inv.lagrange_residual(sc3, 1.0, points=pts3)
    assert rep3.sup <= 1e-5
    _report(9, f"triple-Lie residual {rep.sup:.2e}; multiplier residual {rep3.sup:.2e}")


# -- 10: metric Euler-Lagrange -------------------------------------------------------------------


def test_acceptance_10_metric_el(reeb_sc, contact):
    sup = 0.0
    for rep in inv.metric_el_residuals(reeb_sc):
        assert rep.sup <= 1e-8
        sup = max(sup, rep.sup)
    w = geo.warped_product_scene(1, "exp(0.2*x0 + 0.1*x1^2)")
    for rep in inv.metric_el_residuals(w):
        assert rep.sup <= 1e-8
        sup = max(sup, rep.sup)
    gvd = inv.gv_metric_functional(contact, QuadratureSpec(resolution=8, error_check=False))
    assert abs(float(np.asarray(gvd.value))) == 0.0
    _report(10, f"integrable-scene EL residual sup {sup:.2e}; harmonic gv_D = 0")


# -- 11: matrix invariants and the density formula -----------------------------------------------


def test_acceptance_11_sigma_and_density(tilted, q2_scene):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        m = rng.integers(2, 4)
        A1 = rng.normal(size=(m, m))
        A2 = rng.normal(size=(m, m))
        got = geo.sigma_sum([A1, A2], m)
        want = float(np.linalg.det(A1 + A2))
        err = abs(got - want)
        worst = max(worst, err)
        assert err <= 1e-10 * max(1.0, abs(want))

    dens_worst = 0.0
    for sc in (tilted, q2_scene):
        pts = sc.sample_points(100)
        ctx = geo.GeometryContext(sc, pts)
        mask = ctx.u_mask()
        pts = pts[:, mask]
        ctx = geo.GeometryContext(sc, pts)
        dens = geo.gv_density_metric(sc, pts)
        gvi = sc.gv_integrand().eval_jets(pts, 0)
        args = [JetForm(sc.chart.dim, 1, t, "contra") for t in ctx.Ts]
        args += [JetForm(sc.chart.dim, 1, ctx.N, "contra")]
        args += [JetForm(sc.chart.dim, 1, bb, "contra") for bb in ctx.B]
        direct = gvi.evaluate(args)
        direct = np.asarray(direct.value if isinstance(direct, Jet) else direct)
        err = float(np.max(np.abs(dens - direct)))
        dens_worst = max(dens_worst, err)
        assert err <= 1e-7
    _report(11, f"sigma-sum det err {worst:.2e} (100 pairs); density err {dens_worst:.2e}")


# -- 12: holomorphic closed form and chart model ---------------------------------------------------


def test_acceptance_12_bott(capsys):
    assert holo.bott_invariant_formula([1, 1]) == 4.0
    assert holo.bott_invariant_formula([1, 1, 1]) == 27.0
    with pytest.raises(FoliaError):
        holo.bott_invariant_formula([1, -1])

    oc, frame = holo.bott_chart_model(1.0, 2.0)
    pts = oc.chart.sample_points(256, 2024)
    rep = holo.formal_integrability_residual(oc, frame, pts)
    assert rep.sup <= 1e-9
    assert rep.extras["pairing_identity_sup"] <= 1e-9

    val, _ = holo.gv_complex(
        oc, frame, QuadratureSpec(resolution=[32, 12, 12], eps0=1e-3, error_check=False)
    )
    formula = holo.bott_invariant_formula([1.0, 2.0])
    ratio = val / (formula * TWO_PI**2)
    _report(12, f"formula values exact; chart residuals {rep.sup:.1e}; "
            f"informative quadrature/closed-form ratio {ratio.real:.6f} "
            "(angular factor (2 pi)^2)")
