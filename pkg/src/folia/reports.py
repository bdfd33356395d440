"""Report builders shared by the HTTP service and the command-line client.

Every builder takes validated inputs and returns a JSON-ready dict:

    {"command": ..., "passed": bool, "seed": int,
     "tolerances": {name: value}, "entries": [{"name", "pass", ...}],
     "artifacts": {filename: text}, ...}

Reports carry no timestamps, so identical inputs produce byte-identical
JSON.  Numeric artifacts (CSV) print floats with 17 significant digits.
"""

import math

import numpy as np

from . import geometry, holomorphic, invariants, reeb
from .errors import FoliaError
from .fields import BumpField, DerivedFormField, ExprFormField, exterior_derivative
from .invariants import VariationSpec
from .jets import Jet
from .quadrature import QuadratureSpec

__all__ = ["quadrature_spec_from_options", "report_check", "report_eta", "report_gv",
           "report_gvs", "report_vary", "report_critical", "report_metric_el",
           "report_index", "report_reeb_solve", "report_reeb_family", "report_bott",
           "report_holo_check"]

DEFAULT_TOLERANCES = {
    "normalization": 1e-9,
    "identity_battery": 1e-9,
    "eta_pipelines": 1e-10,
    "eta_metric": 1e-8,
    "first_variation_rel": 1e-3,
    "second_variation_rel": 1e-2,
    "criticality": 1e-6,
    "lagrange": 1e-5,
    "index_symmetry": 1e-6,
    "metric_el": 1e-8,
    "density_metric": 1e-7,
    "holo_integrability": 1e-9,
}


def quadrature_spec_from_options(options=None, **overrides):
    options = dict(options or {})
    options.update({k: v for k, v in overrides.items() if v is not None})
    kw = {}
    if "resolution" in options:
        kw["resolution"] = options["resolution"]
    if "eps0" in options:
        kw["eps0"] = float(options["eps0"])
    if "chunk" in options:
        kw["chunk"] = int(options["chunk"])
    if "error_check" in options:
        kw["error_check"] = bool(options["error_check"])
    return QuadratureSpec(**kw)


def _entry(name, value, tol=None, passed=None, **extra):
    e = {"name": name, "value": value}
    if tol is not None:
        e["tolerance"] = tol
        e["pass"] = bool(value <= tol) if passed is None else bool(passed)
    elif passed is not None:
        e["pass"] = bool(passed)
    e.update(extra)
    return e


def _finish(command, seed, entries, tolerances, **extra):
    passed = all(e.get("pass", True) for e in entries)
    out = {
        "command": command,
        "passed": bool(passed),
        "seed": int(seed),
        "tolerances": tolerances,
        "entries": entries,
    }
    out.update(extra)
    return out


# -- scene commands ---------------------------------------------------------------


def report_check(scene, options=None):
    """Identity battery + invariant number for a scene."""
    tol = DEFAULT_TOLERANCES
    pts = scene.sample_points()
    entries = [_entry("normalization |iota_T omega - 1|",
                      scene.check_normalization(), tol["normalization"])]

    # d of d vanishes on omega
    dd = exterior_derivative(exterior_derivative(scene.omega)).eval_jets(pts, 0)
    entries.append(_entry("d(d omega) sup", float(np.max(np.abs(dd.values()))),
                          tol["identity_battery"]))

    # eta = (-1)^(q-1) L_T omega
    from .fields import lie_derivative

    ej = scene.eta_form().eval_jets(pts, 0).values()
    lt = lie_derivative(scene.frame, scene.omega).eval_jets(pts, 0).values()
    sign = (-1.0) ** (scene.q - 1)
    entries.append(_entry("eta vs L_T omega sup",
                          float(np.max(np.abs(ej - sign * lt))), tol["eta_pipelines"]))

    if scene.metric is not None:
        ev = geometry.eta_metric_values(scene, pts)
        entries.append(_entry("eta vs mean-curvature one-form sup",
                              float(np.max(np.abs(ej - ev))), tol["eta_metric"]))

    spec = quadrature_spec_from_options(options)
    res = invariants.gv_number(scene, spec)
    entries.append(_entry("gv quadrature converged", 0.0, passed=res.converged,
                          gv=float(np.asarray(res.value)), error=res.error,
                          nodes=res.nodes, drift=res.drift))
    return _finish("check", scene.seed, entries, tol,
                   gv=float(np.asarray(res.value)), gv_error=res.error)


def report_eta(scene, options=None):
    pts = scene.sample_points()
    vals = scene.eta_form().eval_jets(pts, 0).values()
    entries = [_entry("eta sampled", float(np.max(np.abs(vals))),
                      sup=float(np.max(np.abs(vals))),
                      l2=float(np.sqrt(np.mean(vals**2))))]
    header = ",".join(scene.chart.names + tuple(f"eta_{n}" for n in scene.chart.names))
    rows = [header]
    for k in range(pts.shape[1]):
        rows.append(",".join(f"{x:.17g}" for x in list(pts[:, k]) + list(vals[:, k])))
    return _finish("eta", scene.seed, entries, {},
                   artifacts={"eta_samples.csv": "\n".join(rows) + "\n"})


def report_gv(scene, options=None):
    spec = quadrature_spec_from_options(options)
    res = invariants.gv_number(scene, spec)
    entries = [_entry("gv quadrature converged", 0.0, passed=res.converged)]
    return _finish("gv", scene.seed, entries, {},
                   gv=float(np.asarray(res.value)), error=res.error,
                   nodes=res.nodes, schedule=[[e, v] for e, v in res.schedule],
                   drift=res.drift)


def report_gvs(scene, s, options=None):
    spec = quadrature_spec_from_options(options)
    res = invariants.gv_s_number(scene, s, spec)
    entries = [_entry("gv_s quadrature converged", 0.0, passed=res.converged)]
    return _finish("gvs", scene.seed, entries, {}, s=list(int(x) for x in s),
                   gv_s=float(np.asarray(res.value)), error=res.error)


# -- variations --------------------------------------------------------------------


def standard_variations(scene, case, count=3):
    """Admissible bump-modulated variations of the requested case (q = 1).

    case "iii": omega_dot = f (mu - (iota_T mu) omega) for seed one-forms mu;
    case "ii":  T_dot = f P_D(e_k) with P_D(X) = X - omega(X) T;
    case "i":   T_dot = f T, omega_dot = -f omega, omega_ddot = 2 f^2 omega.
    """
    if scene.q != 1:
        raise FoliaError("built-in variation battery needs q = 1")
    chart = scene.chart
    rng = np.random.default_rng(scene.seed + {"i": 1, "ii": 2, "iii": 3}[case])
    lo = chart.box[:, 0]
    wid = chart.widths
    out = []
    for k in range(count):
        center = lo + rng.uniform(0.3, 0.7, chart.dim) * wid
        radius = 0.45 * wid
        bump = BumpField(chart, center, radius)
        trig = ["1", "sin(x + y)", "cos(z)", "sin(2*z - x)", "cos(y)"][k % 5]

        if case == "iii":
            seed_dir = rng.integers(0, chart.dim)

            def fn(points, order, bump=bump, seed_dir=seed_dir, trig=trig):
                from .fields import ExprField, _coordinate_env

                om = scene.omega.eval_jets(points, order)
                env = _coordinate_env(chart, points, order)
                g = bump._from_env(env) * ExprField.parse(trig, chart)._from_env(env)
                pack = scene.eval_pack(points, order)
                mu_comps = [0.0] * len(om.comps)
                mu_comps[seed_dir] = g
                from .fields import JetForm

                mu = JetForm(chart.dim, 1, mu_comps)
                c = mu.contract(pack.Tmulti).comps[0]
                return mu - om.map(lambda x: x * c)

            out.append(VariationSpec(
                omega_dot=DerivedFormField(chart, 1, fn), label=f"iii-{k}"))

        elif case == "ii":
            seed_dir = rng.integers(0, chart.dim)

            def fn(points, order, bump=bump, seed_dir=seed_dir, trig=trig):
                from .fields import ExprField, JetForm, _coordinate_env

                om = scene.omega.eval_jets(points, order)
                env = _coordinate_env(chart, points, order)
                g = bump._from_env(env) * ExprField.parse(trig, chart)._from_env(env)
                T = scene.frame[0].eval_jets(points, order)
                basis = [0.0] * chart.dim
                basis[seed_dir] = 1.0
                X = JetForm(chart.dim, 1, basis, "contra")
                omX = om.contract(X).comps[0]
                comps = []
                for i in range(chart.dim):
                    xi = X.comps[i]
                    ti = T.comps[i]
                    val = (xi - omX * ti) * g
                    comps.append(val)
                return JetForm(chart.dim, 1, comps, "contra")

            out.append(VariationSpec(
                t_dots=[_DerivedVectorField(chart, fn)], label=f"ii-{k}"))

        else:  # case i
            def cdot_env(env, bump=bump, trig=trig):
                from .fields import ExprField

                return bump._from_env(env) * ExprField.parse(trig, chart)._from_env(env)

            def omega_dot_fn(points, order, cdot_env=cdot_env):
                from .fields import _coordinate_env

                om = scene.omega.eval_jets(points, order)
                env = _coordinate_env(chart, points, order)
                c = cdot_env(env)
                return om.map(lambda x: -(x * c) if isinstance(x, Jet) else -(c * x))

            def omega_ddot_fn(points, order, cdot_env=cdot_env):
                from .fields import _coordinate_env

                om = scene.omega.eval_jets(points, order)
                env = _coordinate_env(chart, points, order)
                c = cdot_env(env)
                return om.map(lambda x: (x * c * c * 2.0) if isinstance(x, Jet) else (2.0 * c * c * x))

            def t_dot_fn(points, order, cdot_env=cdot_env):
                from .fields import JetForm, _coordinate_env

                T = scene.frame[0].eval_jets(points, order)
                env = _coordinate_env(chart, points, order)
                c = cdot_env(env)
                return JetForm(chart.dim, 1, [c * t for t in T.comps], "contra")

            out.append(VariationSpec(
                omega_dot=DerivedFormField(chart, 1, omega_dot_fn),
                omega_ddot=DerivedFormField(chart, 1, omega_ddot_fn),
                t_dots=[_DerivedVectorField(chart, t_dot_fn)],
                label=f"i-{k}"))
    return out


class _DerivedVectorField(DerivedFormField):
    def __init__(self, chart, fn):
        super().__init__(chart, 1, fn)
        self.variance = "contra"


def report_vary(scene, case="iii", count=3, options=None, fd_step=1e-3):
    """First/second variation versus centered finite differences."""
    tol = DEFAULT_TOLERANCES
    spec = quadrature_spec_from_options(options, error_check=False)
    gv_scale = abs(float(np.asarray(invariants.gv_number(scene, spec).value)))
    floor = max(1e-6 * max(gv_scale, 1.0), 1e-9)
    entries = []
    for var in standard_variations(scene, case, count):
        var.check_admissible(scene)
        first, _ = invariants.first_variation(scene, var, spec)
        fd1 = invariants.finite_difference_gv(scene, var, spec, t=fd_step)
        denom = max(abs(fd1), floor)
        rel1 = abs(first - fd1) / denom
        second, _ = invariants.second_variation(scene, var, spec)
        fd2 = invariants.finite_difference_gv(scene, var, spec, t=2 * fd_step, order=2)
        rel2 = abs(second - fd2) / max(abs(fd2), floor)
        entries.append(_entry(f"first variation {var.label}", rel1,
                              tol["first_variation_rel"],
                              analytic=first, finite_difference=fd1))
        entries.append(_entry(f"second variation {var.label}", rel2,
                              tol["second_variation_rel"],
                              analytic=second, finite_difference=fd2))
    return _finish("vary", scene.seed, entries,
                   {k: tol[k] for k in ("first_variation_rel", "second_variation_rel")},
                   case=case)


def report_critical(scene, lam=None, options=None):
    tol = DEFAULT_TOLERANCES
    entries = []
    if lam is None:
        rep = invariants.criticality_residual(scene, tol["criticality"])
        entries.append(_entry(rep.name, rep.sup, tol["criticality"], l2=rep.l2,
                              **rep.extras))
    else:
        rep = invariants.lagrange_residual(scene, lam, tol["lagrange"])
        entries.append(_entry(rep.name, rep.sup, tol["lagrange"], l2=rep.l2,
                              **rep.extras))
    return _finish("critical", scene.seed, entries,
                   {k: tol[k] for k in ("criticality", "lagrange")})


def report_metric_el(scene, options=None):
    tol = DEFAULT_TOLERANCES
    entries = []
    for rep in invariants.metric_el_residuals(scene, tol["metric_el"]):
        entries.append(_entry(rep.name, rep.sup, tol["metric_el"], l2=rep.l2, **rep.extras))
    spec = quadrature_spec_from_options(options, error_check=False)
    gvd = invariants.gv_metric_functional(scene, spec)
    return _finish("metric-el", scene.seed, entries, {"metric_el": tol["metric_el"]},
                   gv_metric=float(np.asarray(gvd.value)))


def report_index(scene, pairs=10, options=None):
    """Symmetry of the second-variation bilinear form on seeded bump pairs."""
    tol = DEFAULT_TOLERANCES
    chart = scene.chart
    rng = np.random.default_rng(scene.seed + 77)
    spec = quadrature_spec_from_options(options, error_check=False)
    lo = chart.box[:, 0]
    wid = chart.widths
    entries = []
    nomega = len(scene.omega.eval_jets(scene.sample_points(1), 0).comps)
    for k in range(pairs):
        c1 = lo + rng.uniform(0.25, 0.75, chart.dim) * wid
        c2 = lo + rng.uniform(0.25, 0.75, chart.dim) * wid
        b1 = BumpField(chart, c1, 0.48 * wid)
        b2 = BumpField(chart, c2, 0.48 * wid)
        w1 = rng.normal(size=nomega)
        w2 = rng.normal(size=nomega)
        alpha = ExprFormField(chart, scene.q, [b1 * w for w in w1])
        beta = ExprFormField(chart, scene.q, [b2 * w for w in w2])
        jab, jba, _ = invariants.index_form_pair(scene, alpha, beta, spec)
        defect = abs(jab - jba) / max(abs(jab), 1.0)
        entries.append(_entry(f"index symmetry pair {k}", defect,
                              tol["index_symmetry"], J_ab=jab, J_ba=jba))
    return _finish("index", scene.seed, entries,
                   {"index_symmetry": tol["index_symmetry"]})


# -- Reeb profiles -------------------------------------------------------------------


def report_reeb_solve(ode="cond2", A0=1.0, A1=0.25, A2=0.0, A3=0.0, lam=0.0,
                      tildeA0=0.5, rtol=1e-10, **_):
    if ode == "cond2":
        prof = reeb.solve_cond2(A0, A1, A2, rtol=rtol)
        resid = float(np.max(np.abs(prof.cond_a1_residual())))
        entries = [_entry("profile equation residual", resid, 1e-6,
                          r0=prof.r0, r0_bracket=prof.r0_bracket)]
    elif ode == "cond3":
        prof = reeb.solve_cond3(lam, A1, A2, A3, rtol=rtol)
        resid = float(np.max(np.abs(prof.cond3_residual())))
        entries = [_entry("constrained profile residual", resid, 1e-5,
                          r0=prof.r0, r0_bracket=prof.r0_bracket)]
    elif ode == "reduced":
        prof = reeb.solve_reduced(tildeA0, A1)
        drift = prof.first_integral_drift()
        entries = [_entry("first integral drift", drift, 1e-8,
                          r0=prof.r0, r0_bracket=prof.r0_bracket)]
    else:
        raise FoliaError(f"unknown ode {ode!r} (cond2 | cond3 | reduced)")
    name = f"reeb_{ode}_A1_{A1:g}.csv"
    return _finish("reeb-solve", 0, entries, {}, profile=prof.summary(),
                   artifacts={name: prof.csv_text()})


def report_reeb_family(A0=1.0, A2=0.0, A1_list=(0.125, 0.25, 0.375, 0.5, 0.625),
                       rtol=1e-10, **_):
    profiles, manifest = reeb.figure_family(A0, A2, A1_list, rtol=rtol)
    entries = []
    artifacts = {}
    for prof in profiles:
        resid = float(np.max(np.abs(prof.cond_a1_residual())))
        a1 = prof.params["A1"]
        entries.append(_entry(f"profile A1={a1:g} residual", resid, 1e-6,
                              r0=prof.r0))
        artifacts[f"reeb_cond2_A1_{a1:g}.csv"] = prof.csv_text()
    import json as _json

    artifacts["family_manifest.json"] = _json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    return _finish("reeb-family", 0, entries, {}, manifest=manifest, artifacts=artifacts)


# -- holomorphic ----------------------------------------------------------------------


def report_bott(lams, **_):
    try:
        value = holomorphic.bott_invariant_formula(lams)
    except FoliaError as exc:
        return _finish("bott", 0, [_entry("weights admissible", 1.0, passed=False,
                                          reason=str(exc))], {},
                       rejected=True)
    return _finish("bott", 0, [_entry("weights admissible", 0.0, passed=True)], {},
                   value_re=value.real, value_im=value.imag)


def report_holo_check(lam0=1.0, lam1=1.0, options=None):
    tol = DEFAULT_TOLERANCES
    omega_c, frame = holomorphic.bott_chart_model(lam0, lam1)
    pts = omega_c.chart.sample_points(256, 2024)
    rep = holomorphic.formal_integrability_residual(omega_c, frame, pts,
                                                    tol["holo_integrability"])
    entries = [
        _entry("formal integrability", rep.sup, tol["holo_integrability"], **rep.extras),
        _entry("d omega_c = omega_c ^ eta_c", rep.extras["pairing_identity_sup"],
               tol["holo_integrability"]),
    ]
    spec = quadrature_spec_from_options(options or {"resolution": [32, 16, 16],
                                                    "eps0": 1e-3})
    value, res = holomorphic.gv_complex(omega_c, frame, spec, check_points=pts)
    formula = holomorphic.bott_invariant_formula([lam0, lam1])
    angular = (2 * math.pi) ** 2
    ratio = value / (formula * angular)
    return _finish("holo-check", 2024, entries,
                   {"holo_integrability": tol["holo_integrability"]},
                   quadrature_re=value.real, quadrature_im=value.imag,
                   closed_form_re=formula.real, closed_form_im=formula.imag,
                   angular_factor=angular,
                   informative_ratio_re=ratio.real, informative_ratio_im=ratio.imag,
                   note="quadrature is compared to the closed form times the "
                        "angular factor; this comparison is informative only")
