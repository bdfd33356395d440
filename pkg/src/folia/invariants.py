"""Godbillon-Vey type functionals, their variations, criticality residuals,
the index form, and metric Euler-Lagrange residuals.

The first and second variation of gv(omega, T) = integral of
eta ^ (d eta)^q are evaluated from the analytic formulas

    gv'  = (q+1) * integral of  eta_dot ^ (d eta)^q,
    gv'' = (q+1) * integral of (eta_ddot ^ (d eta)^q
                                + q eta_dot ^ d eta_dot ^ (d eta)^(q-1)),

with eta_dot and eta_ddot assembled from the variation data; every such
value can be cross-checked against centered finite differences of a
realized family that re-imposes the unit-contraction normalization by a
pure rescale at each t.
"""

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import FoliaError, IntegrabilityError, ShapeError
from .fields import (
    DerivedFormField,
    FramedScene,
    JetForm,
    lie_jet,
)
from .jets import Jet
from .quadrature import integrate_density, integrate_form, lp_norm_check

__all__ = [
    "ResidualReport",
    "VariationSpec",
    "gv_number",
    "gv_s_number",
    "first_variation",
    "second_variation",
    "finite_difference_gv",
    "criticality_residual",
    "omega_residual",
    "lagrange_residual",
    "average_integrability",
    "index_form",
    "jacobi_operator",
    "metric_el_residuals",
    "gv_metric_functional",
]


@dataclass
class ResidualReport:
    name: str
    sup: float
    l2: float
    tolerance: float
    seed: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.sup <= self.tolerance

    def as_dict(self):
        d = {
            "name": self.name,
            "sup": self.sup,
            "l2": self.l2,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
            "seed": self.seed,
        }
        d.update(self.extras)
        return d


def _norms(values):
    flat = np.ravel(np.asarray(values, dtype=float))
    sup = float(np.max(np.abs(flat))) if flat.size else 0.0
    l2 = float(np.sqrt(np.mean(flat**2))) if flat.size else 0.0
    return sup, l2


def _report(name, values, tol, seed=0, **extras):
    sup, l2 = _norms(values)
    return ResidualReport(name, sup, l2, tol, seed, dict(extras))


# -- gv numbers ----------------------------------------------------------------


def gv_number(scene, spec=None):
    """integral of eta ^ (d eta)^q with a quadrature error estimate."""
    return integrate_form(scene.gv_integrand(), spec)


def gv_s_number(scene, s, spec=None):
    """integral of eta ^ (d eta)^{s_0} ^ (d omega_1)^{s_1} ^ ... for |s| = q.

    Needs the one-form frame omega_1 .. omega_q on the scene.
    """
    if scene.frame_forms is None:
        raise FoliaError("gv_s needs the one-form frame omega_1..omega_q")
    s = tuple(int(x) for x in s)
    if len(s) != scene.q + 1 or any(x < 0 for x in s):
        raise ShapeError("s must be q+1 nonnegative integers")
    if sum(s) != scene.q:
        raise ShapeError("|s| must equal q so the wedge has top degree")

    def fn(points, order):
        pack = scene.eval_pack(points, order + 2)
        domega = pack.omega.d()
        eta_j = domega.contract(
            pack.Tmulti.map(lambda c: c.truncated(domega.order) if isinstance(c, Jet) else c)
        )
        out = eta_j.map(lambda c: c.truncated(order) if isinstance(c, Jet) else c)
        if s[0]:
            deta = eta_j.d()
            for _ in range(s[0]):
                out = out.wedge(deta)
        for i, si in enumerate(s[1:]):
            if si:
                dwi = scene.frame_forms[i].eval_jets(points, order + 1).d()
                for _ in range(si):
                    out = out.wedge(dwi)
        return out

    return integrate_form(DerivedFormField(scene.chart, scene.chart.dim, fn), spec)


# -- variations -----------------------------------------------------------------


@dataclass
class VariationSpec:
    """First/second order variation data for a framed scene.

    omega_dot/omega_ddot are q-form fields (None = 0); t_dots/t_ddots are
    lists of vector fields (None = all zero).  Admissibility means the
    derivative of the unit-contraction normalization vanishes.
    """

    omega_dot: object = None
    t_dots: object = None
    omega_ddot: object = None
    t_ddots: object = None
    label: str = "variation"

    def _multis(self, scene, points, order):
        """Multivector t-coefficients M0 + t M1 + t^2 M2 of wedge(T_i(t))."""
        n = scene.chart.dim
        Ts = [v.eval_jets(points, order) for v in scene.frame]
        dots = [v.eval_jets(points, order) if v is not None else None
                for v in (self.t_dots or [None] * scene.q)]
        ddots = [v.eval_jets(points, order) if v is not None else None
                 for v in (self.t_ddots or [None] * scene.q)]
        zero = None
        coeffs = {}  # t-degree -> JetForm (contravariant)
        for i in range(scene.q):
            terms = {0: Ts[i]}
            if dots[i] is not None:
                terms[1] = dots[i]
            if ddots[i] is not None:
                terms[2] = 0.5 * ddots[i]
            if not coeffs:
                coeffs = dict(terms)
                continue
            new = {}
            for da, fa in coeffs.items():
                for db, fb in terms.items():
                    if da + db > 2:
                        continue
                    w = fa.wedge(fb)
                    new[da + db] = w if da + db not in new else new[da + db] + w
            coeffs = new
        out = []
        for d in range(3):
            if d in coeffs:
                out.append(coeffs[d])
            else:
                out.append(zero)
        return out

    def check_admissible(self, scene, tol=1e-8, points=None):
        pts = points if points is not None else scene.sample_points()
        M0, M1, _ = self._multis(scene, pts, 0)
        om = scene.omega.eval_jets(pts, 0)
        val = 0.0
        if self.omega_dot is not None:
            od = self.omega_dot.eval_jets(pts, 0)
            v = od.contract(M0).comps[0]
            val = val + (v.value if isinstance(v, Jet) else v)
        if M1 is not None:
            v = om.contract(M1).comps[0]
            val = val + (v.value if isinstance(v, Jet) else v)
        err = float(np.max(np.abs(np.asarray(val))))
        if err > tol:
            raise FoliaError(
                f"variation violates the normalization derivative by {err:.2e}"
            )
        return err

    def realize(self, scene, t):
        """Scene at parameter t, with the normalization re-imposed by rescale."""
        q = scene.q

        def omega_fn(points, order):
            om = scene.omega.eval_jets(points, order)
            if self.omega_dot is not None:
                om = om + t * self.omega_dot.eval_jets(points, order)
            if self.omega_ddot is not None:
                om = om + (0.5 * t * t) * self.omega_ddot.eval_jets(points, order)
            M0, M1, M2 = self._multis(scene, points, order)
            Tm = M0
            if M1 is not None:
                Tm = Tm + t * M1
            if M2 is not None:
                Tm = Tm + (t * t) * M2
            c = om.contract(Tm).comps[0]
            if isinstance(c, Jet):
                return om.map(lambda x: x * c.reciprocal())
            return om.map(lambda x: x * (1.0 / c))

        new_omega = DerivedFormField(scene.chart, q, omega_fn)

        new_frame = []
        for i in range(q):
            base = scene.frame[i]
            dot = (self.t_dots or [None] * q)[i]
            ddot = (self.t_ddots or [None] * q)[i]

            def vec_fn(points, order, base=base, dot=dot, ddot=ddot):
                v = base.eval_jets(points, order)
                if dot is not None:
                    v = v + t * dot.eval_jets(points, order)
                if ddot is not None:
                    v = v + (0.5 * t * t) * ddot.eval_jets(points, order)
                return v

            new_frame.append(_DerivedVector(scene.chart, vec_fn))

        return FramedScene(
            scene.chart,
            new_omega,
            new_frame,
            metric=scene.metric,
            jet_order=scene.jet_order,
            seed=scene.seed,
            nsamples=scene.nsamples,
            declared=dict(scene.declared),
        )


class _DerivedVector(DerivedFormField):
    def __init__(self, chart, fn):
        super().__init__(chart, 1, fn)
        self.variance = "contra"


def _eta_dot_jets(scene, var, points, order):
    """eta_dot = iota_T d(omega_dot) + iota_{T_dot} d(omega)."""
    M0, M1, _ = var._multis(scene, points, order + 1)
    acc = None
    if var.omega_dot is not None:
        dod = var.omega_dot.eval_jets(points, order + 1).d()
        acc = dod.contract(M0.map(lambda c: c.truncated(dod.order) if isinstance(c, Jet) else c))
    if M1 is not None:
        dom = scene.omega.eval_jets(points, order + 1).d()
        term = dom.contract(M1.map(lambda c: c.truncated(dom.order) if isinstance(c, Jet) else c))
        acc = term if acc is None else acc + term
    if acc is None:
        raise FoliaError("empty variation")
    return acc


def first_variation(scene, var, spec=None, check=True, lp_p=2.0):
    """(q+1) * integral of eta_dot ^ (d eta)^q for an admissible variation."""
    if check:
        var.check_admissible(scene)
        if scene.chart.sigma:
            eta_f = scene.eta_form()

            def integrand_fn(points, order):
                ed = _eta_dot_jets(scene, var, points, order)
                ej = eta_f.eval_jets(points, order + 1)
                out = ed.wedge(ej.map(lambda c: c.truncated(ed.order) if isinstance(c, Jet) else c))
                de = ej.d()
                for _ in range(scene.q - 1):
                    out = out.wedge(de)
                return out

            b = DerivedFormField(scene.chart, 2 * scene.q, integrand_fn)
            if scene.metric is not None:
                rep = lp_norm_check(b, lp_p, scene.metric, spec)
                if rep.verdict == "divergent" or not rep.exponent_ok:
                    raise IntegrabilityError(
                        f"variation integrability check failed: {rep.verdict}"
                    )

    def fn(points, order):
        ed = _eta_dot_jets(scene, var, points, order)
        pack = scene.eval_pack(points, order + 2)
        deta = pack.omega.d().contract(
            pack.Tmulti.map(lambda c: c.truncated(pack.omega.order - 1) if isinstance(c, Jet) else c)
        ).d()
        out = ed.map(lambda c: c.truncated(deta.order) if isinstance(c, Jet) else c)
        for _ in range(scene.q):
            out = out.wedge(deta)
        return out

    result = integrate_form(DerivedFormField(scene.chart, scene.chart.dim, fn), spec)
    return (scene.q + 1) * result.value, result


def second_variation(scene, var, spec=None):
    """(q+1) * integral of (eta_ddot ^ (d eta)^q + q eta_dot ^ d eta_dot ^ (d eta)^(q-1))."""
    q = scene.q

    def fn(points, order):
        # eta_ddot = iota_{M0} d(omega_ddot) + 2 iota_{M1} d(omega_dot)
        #            + 2 iota_{M2} d(omega)
        M0, M1, M2 = var._multis(scene, points, order + 1)
        pack = scene.eval_pack(points, order + 2)
        domega = pack.omega.d()
        eta_j = domega.contract(
            pack.Tmulti.map(lambda c: c.truncated(domega.order) if isinstance(c, Jet) else c)
        )
        deta = eta_j.d()

        def trunc(jf, target):
            return jf.map(lambda c: c.truncated(target) if isinstance(c, Jet) else c)

        eta_ddot = None
        if var.omega_ddot is not None:
            dodd = var.omega_ddot.eval_jets(points, order + 1).d()
            eta_ddot = dodd.contract(trunc(M0, dodd.order))
        if M1 is not None and var.omega_dot is not None:
            dod = var.omega_dot.eval_jets(points, order + 1).d()
            term = 2.0 * dod.contract(trunc(M1, dod.order))
            eta_ddot = term if eta_ddot is None else eta_ddot + term
        if M2 is not None:
            dom = scene.omega.eval_jets(points, order + 1).d()
            term = 2.0 * dom.contract(trunc(M2, dom.order))
            eta_ddot = term if eta_ddot is None else eta_ddot + term

        out = None
        if eta_ddot is not None:
            w = trunc(eta_ddot, deta.order)
            for _ in range(q):
                w = w.wedge(deta)
            out = w
        eta_dot = _eta_dot_jets(scene, var, points, order + 1)
        d_eta_dot = eta_dot.d()
        w = trunc(eta_dot, d_eta_dot.order).wedge(d_eta_dot)
        for _ in range(q - 1):
            w = w.wedge(deta)
        w = float(q) * w
        out = w if out is None else out + w
        return out

    result = integrate_form(DerivedFormField(scene.chart, scene.chart.dim, fn), spec)
    return (q + 1) * result.value, result


def finite_difference_gv(scene, var, spec=None, t=1e-3, order=1):
    """Centered finite differences of gv along the realized family."""
    gp = gv_number(var.realize(scene, t), spec).value
    gm = gv_number(var.realize(scene, -t), spec).value
    if order == 1:
        return (gp - gm) / (2 * t)
    g0 = gv_number(scene, spec).value
    return (gp - 2 * g0 + gm) / (t * t)


# -- criticality ------------------------------------------------------------------


def _integrability_certificate(scene, points, tol=1e-8):
    """Sampled certificate that ker(omega) is integrable."""
    if scene.q == 1:
        pack = scene.eval_pack(points, 1)
        w = pack.omega.map(lambda c: c.truncated(0) if isinstance(c, Jet) else c)
        vals = w.wedge(pack.omega.d()).values()
        return float(np.max(np.abs(vals)))
    if scene.frame_forms is None:
        raise IntegrabilityError(
            "integrability certificate for q >= 2 needs the one-form frame"
        )
    sup = 0.0
    omegas = [f.eval_jets(points, 1) for f in scene.frame_forms]
    omega0 = None
    for f in omegas:
        d = f.d()
        omega0 = d if omega0 is None else omega0.wedge(d)
    for f in omegas:
        w = f.map(lambda c: c.truncated(0) if isinstance(c, Jet) else c)
        vals = w.wedge(omega0).values()
        sup = max(sup, float(np.max(np.abs(vals))))
    return sup


def omega_residual(scene, points, order=0):
    """The criticality form: eta ^ iota_T (d eta)^q + (-1)^q L_T (d eta)^q."""
    q = scene.q
    pack = scene.eval_pack(points, order + 3)
    domega = pack.omega.d()
    eta_j = domega.contract(
        pack.Tmulti.map(lambda c: c.truncated(domega.order) if isinstance(c, Jet) else c)
    )
    deta = eta_j.d()
    detaq = None
    for _ in range(q):
        detaq = deta if detaq is None else detaq.wedge(deta)
    Tm = pack.Tmulti.map(lambda c: c.truncated(detaq.order) if isinstance(c, Jet) else c)
    first = eta_j.map(lambda c: c.truncated(detaq.order - 1) if isinstance(c, Jet) else c).wedge(
        detaq.contract(Tm).map(lambda c: c.truncated(detaq.order - 1) if isinstance(c, Jet) else c)
    )
    second = lie_jet(Tm, detaq)
    return first + ((-1.0) ** q) * second, pack, eta_j, deta


def criticality_residual(scene, tol=1e-6, points=None, certificate_tol=1e-8):
    """Residual report for the criticality condition iota_T L_T (d eta)^q = 0.

    The scene must declare ker(omega) integrable; the declaration is
    validated by a sampled certificate.  Also reports the full form Omega
    and the frame equivalence between iota_T Omega = 0 and Omega = 0.
    """
    pts = points if points is not None else scene.sample_points()
    if not scene.declared.get("integrable_ker", False):
        raise IntegrabilityError("scene does not declare ker(omega) integrable")
    cert = _integrability_certificate(scene, pts)
    if cert > certificate_tol:
        raise IntegrabilityError(
            f"integrability certificate failed: sup |omega ^ d omega| = {cert:.2e}"
        )
    Omega, pack, eta_j, deta = omega_residual(scene, pts)
    q = scene.q
    detaq = None
    for _ in range(q):
        detaq = deta if detaq is None else detaq.wedge(deta)
    Tm = pack.Tmulti.map(lambda c: c.truncated(detaq.order) if isinstance(c, Jet) else c)
    lt = lie_jet(Tm, detaq)
    main = lt.contract(Tm.map(lambda c: c.truncated(lt.order) if isinstance(c, Jet) else c))
    rep = _report(
        "criticality iota_T L_T (d eta)^q",
        main.values(),
        tol,
        seed=scene.seed,
        certificate=cert,
        omega_form_sup=_norms(Omega.values())[0],
        iota_T_omega_form_sup=_norms(
            Omega.contract(Tm.map(lambda c: c.truncated(Omega.order) if isinstance(c, Jet) else c)).values()
        )[0],
    )
    return rep


def lagrange_residual(scene, lam, tol=1e-5, points=None):
    """q = 1: residual of (L_T)^3 omega = lam * L_T omega, sampled.

    Also reports L_T(eta ^ d eta), the invariance of the gv density along T.
    """
    if scene.q != 1:
        return frame_lagrange_residuals(scene, lam, tol=tol, points=points)
    pts = points if points is not None else scene.sample_points()
    pack = scene.eval_pack(pts, 3)
    Tm = pack.Tmulti
    lt1 = lie_jet(Tm, pack.omega)
    lt2 = lie_jet(Tm.map(lambda c: c.truncated(lt1.order) if isinstance(c, Jet) else c), lt1)
    lt3 = lie_jet(Tm.map(lambda c: c.truncated(lt2.order) if isinstance(c, Jet) else c), lt2)
    resid = lt3 - float(lam) * lt1.map(lambda c: c.truncated(lt3.order) if isinstance(c, Jet) else c)
    # L_T of the gv density 3-form
    eta_j = pack.omega.d().contract(Tm.map(lambda c: c.truncated(pack.omega.order - 1) if isinstance(c, Jet) else c))
    gvden = eta_j.map(lambda c: c.truncated(eta_j.order - 1) if isinstance(c, Jet) else c).wedge(eta_j.d())
    flow = lie_jet(Tm.map(lambda c: c.truncated(gvden.order) if isinstance(c, Jet) else c), gvden)
    return _report(
        "(L_T)^3 omega - lam L_T omega",
        resid.values(),
        tol,
        seed=scene.seed,
        lam=float(lam),
        lt_gv_density_sup=_norms(flow.values())[0],
    )


def frame_lagrange_residuals(scene, lams, tol=1e-5, points=None):
    """General-q Lagrange system residuals for the frame functionals.

    For each i: (-1)^(i-1) (q+1) hat(omega)_i ^ Omega
                - sum_j lam_j (delta_ij omega_0 + d omega_i ^ hat(omega)_{0j} terms).
    """
    if scene.frame_forms is None:
        raise FoliaError("frame Lagrange residuals need the one-form frame")
    pts = points if points is not None else scene.sample_points()
    q = scene.q
    lams = [float(x) for x in np.atleast_1d(lams)]
    if len(lams) != q:
        raise ShapeError("need q multipliers")
    Omega, pack, _, _ = omega_residual(scene, pts)
    omegas = [f.eval_jets(pts, Omega.order + 1) for f in scene.frame_forms]
    domegas = [f.d() for f in omegas]
    omega0 = None
    for d in domegas:
        omega0 = d if omega0 is None else omega0.wedge(d)

    def hat_wedge(forms, skip):
        out = None
        for j, f in enumerate(forms):
            if j == skip:
                continue
            out = f if out is None else out.wedge(f)
        return out

    sups = []
    for i in range(q):
        hat_i = hat_wedge(omegas, i)
        if hat_i is not None:
            lhs = hat_i.map(lambda c: c.truncated(Omega.order) if isinstance(c, Jet) else c).wedge(Omega)
        else:
            lhs = Omega
        lhs = float((-1.0) ** i * (q + 1.0)) * lhs  # (-1)^(i-1)(q+1), i one-based
        hat0i = hat_wedge(domegas, i)
        rhs = None
        for j in range(q):
            extra = domegas[j].wedge(hat0i) if hat0i is not None else domegas[j]
            term = (omega0 + extra) if i == j else extra
            term = float(lams[j]) * term
            rhs = term if rhs is None else rhs + term
        resid = lhs.map(lambda c: c.truncated(min(lhs.order, rhs.order)) if isinstance(c, Jet) else c) - \
            rhs.map(lambda c: c.truncated(min(lhs.order, rhs.order)) if isinstance(c, Jet) else c)
        sups.append(_norms(resid.values())[0])
    return ResidualReport(
        "frame Lagrange system", max(sups), float(np.sqrt(np.mean(np.square(sups)))),
        tol, scene.seed, {"per_equation_sup": sups}
    )


def average_integrability(scene, spec=None):
    """J_i = integral of omega_i ^ (d omega_1 ^ ... ^ d omega_q) per frame form.

    For q = 1 this is the integral of omega ^ d omega.
    """
    if scene.q == 1 and scene.frame_forms is None:
        forms = [scene.omega]
    elif scene.frame_forms is not None:
        forms = scene.frame_forms
    else:
        raise FoliaError("average integrability needs the one-form frame")

    out = []
    for i in range(len(forms)):

        def fn(points, order, i=i):
            omegas = [f.eval_jets(points, order + 1) for f in forms]
            omega0 = None
            for f in omegas:
                d = f.d()
                omega0 = d if omega0 is None else omega0.wedge(d)
            wi = omegas[i].map(lambda c: c.truncated(omega0.order) if isinstance(c, Jet) else c)
            return wi.wedge(omega0)

        out.append(integrate_form(DerivedFormField(scene.chart, scene.chart.dim, fn), spec))
    return out


# -- index form --------------------------------------------------------------------


def _trunc(jf, target):
    return jf.map(lambda c: c.truncated(target) if isinstance(c, Jet) else c)


def _index_outer(scene, pack, alpha_da, order):
    """L_T(L_T d alpha ^ (d eta)^(q-1)) from a pre-evaluated d alpha."""
    q = scene.q
    Tm = pack.Tmulti
    inner = lie_jet(_trunc(Tm, alpha_da.order), alpha_da)
    if q > 1:
        domega = pack.omega.d()
        eta_j = domega.contract(_trunc(Tm, domega.order))
        deta = eta_j.d()
        for _ in range(q - 1):
            inner = inner.wedge(_trunc(deta, inner.order))
    return lie_jet(_trunc(Tm, inner.order), inner)


def _index_integrand(scene, alpha, beta):
    def fn(points, order):
        pack = scene.eval_pack(points, order + 2)
        da = alpha.eval_jets(points, order + 3).d()
        outer = _index_outer(scene, pack, da, order)
        bj = beta.eval_jets(points, order)
        return _trunc(outer, order).wedge(_trunc(bj, order))

    return DerivedFormField(scene.chart, scene.chart.dim, fn)


def _check_support(scene, form, tol=1e-12, shell=0.02, count=64):
    """Sampled certificate that a form vanishes near the boundary and sigma.

    Only meaningful on charts with a singular set or non-periodic
    coordinates; fully periodic charts need no cutoff.
    """
    chart = scene.chart
    shells = []
    rng = np.random.default_rng(scene.seed + 13)
    for d in range(chart.dim):
        if chart.periodic[d]:
            continue
        for edge in chart.box[d]:
            pts = rng.uniform(chart.box[:, 0], chart.box[:, 1], (count, chart.dim)).T
            pts[d] = edge + (shell * chart.widths[d]) * (
                rng.uniform(0, 1, count) if edge == chart.box[d, 0] else -rng.uniform(0, 1, count)
            )
            shells.append(pts)
    for s in chart.sigma:
        pts = rng.uniform(chart.box[:, 0], chart.box[:, 1], (count, chart.dim)).T
        offs = (shell * chart.widths[s.coord]) * rng.uniform(0.05, 1, count)
        pts[s.coord] = s.value + offs
        shells.append(pts)
    for pts in shells:
        vals = form.eval_jets(chart.validate_points(pts, 0.0), 0).values()
        if float(np.max(np.abs(vals))) > tol:
            raise FoliaError(
                "form is not supported away from the boundary / singular set"
            )


def index_form(scene, alpha, beta, spec=None, check_support=True):
    """J(alpha, beta) = integral of L_T(L_T d alpha ^ (d eta)^(q-1)) ^ beta.

    On charts with boundary or a singular set, alpha and beta must be
    cut off away from them (sampled certificate)."""
    if check_support and (scene.chart.sigma or not all(scene.chart.periodic)):
        _check_support(scene, alpha)
        _check_support(scene, beta)
    return integrate_form(_index_integrand(scene, alpha, beta), spec)


def index_form_pair(scene, alpha, beta, spec=None):
    """(J(alpha, beta), J(beta, alpha)) from one shared evaluation sweep."""

    def density(points):
        pack = scene.eval_pack(points, 2)
        da = alpha.eval_jets(points, 3)
        db = beta.eval_jets(points, 3)
        outer_a = _index_outer(scene, pack, da.d(), 0)
        outer_b = _index_outer(scene, pack, db.d(), 0)
        ab = _trunc(outer_a, 0).wedge(_trunc(db, 0)).comps[0]
        ba = _trunc(outer_b, 0).wedge(_trunc(da, 0)).comps[0]
        ab = ab.value if isinstance(ab, Jet) else ab
        ba = ba.value if isinstance(ba, Jet) else ba
        return np.stack([np.asarray(ab), np.asarray(ba)])

    res = integrate_density(density, scene.chart, spec)
    v = np.asarray(res.value)
    return float(v[0]), float(v[1]), res


def jacobi_operator(scene, alpha, points):
    """D(alpha) = star L_T(L_T d alpha ^ (d eta)^(q-1)) as numeric tensors."""
    from .exterior import AltTensor, PointMetric, hodge
    from .quadrature import _metric_values

    if scene.metric is None:
        raise FoliaError("the Jacobi operator needs a metric for the Hodge star")
    q = scene.q
    pack = scene.eval_pack(points, 3)
    Tm = pack.Tmulti

    def trunc(jf, target):
        return jf.map(lambda c: c.truncated(target) if isinstance(c, Jet) else c)

    da = alpha.eval_jets(points, 3).d()
    inner = lie_jet(trunc(Tm, da.order), da)
    if q > 1:
        domega = pack.omega.d()
        eta_j = domega.contract(trunc(Tm, domega.order))
        deta = eta_j.d()
        for _ in range(q - 1):
            inner = inner.wedge(trunc(deta, inner.order))
    outer = lie_jet(trunc(Tm, inner.order), inner)
    vals = outer.values()  # (ncomps, npts)
    g = _metric_values(scene.metric, points)
    out = []
    for p in range(points.shape[1]):
        m = PointMetric(g[p])
        a = AltTensor(scene.chart.dim, outer.degree, vals[:, p])
        out.append(hodge(a, m))
    return out


# -- metric Euler-Lagrange -----------------------------------------------------------


def metric_el_residuals(scene, tol=1e-8, points=None, u_tol=1e-8):
    """The three q=1 metric-variation equations, sampled on U.

    Residuals: Div(Div(T_NB T) T);  Div(T_NB T) - (T(log k) - h_NN) T_NB;
    (tau - h_BN) T_NB.  When U is empty (harmonic normal distribution) the
    equations hold trivially and zero reports are returned.
    """
    if scene.q != 1:
        raise ShapeError("metric Euler-Lagrange residuals are implemented for q = 1")
    pts = points if points is not None else scene.sample_points()
    ctx = geometry.GeometryContext(scene, pts)
    mask = ctx.u_mask(u_tol)
    if not np.any(mask):
        zero = np.zeros(1)
        return [
            _report("metric EL: Div(Div(T_NB T) T)", zero, tol, scene.seed, trivial=True),
            _report("metric EL: Div(T_NB T) - (T(log k) - h_NN) T_NB", zero, tol, scene.seed, trivial=True),
            _report("metric EL: (tau - h_BN) T_NB", zero, tol, scene.seed, trivial=True),
        ]
    if not np.all(mask):
        pts = pts[:, mask]
        ctx = geometry.GeometryContext(scene, pts)
    T = ctx.Ts[0]
    k, tau, N, B = ctx.frenet()
    Bv = ctx.B[0]
    tnb = ctx.integrability_coeffs(N, Bv)[0]
    X = [tnb * t for t in T]
    divX = ctx.divergence(X)
    r1 = ctx.divergence([divX * t for t in T])
    h_nn = ctx.dot(ctx.nabla(N, N), T)
    t_logk = ctx.scalar_derivative(T, k) / k
    r2 = divX - (t_logk - h_nn) * tnb
    h_bn = ctx.dot(ctx.nabla(Bv, N), T)
    r3 = (tau - h_bn) * tnb
    return [
        _report("metric EL: Div(Div(T_NB T) T)", np.asarray(r1.value), tol, scene.seed),
        _report(
            "metric EL: Div(T_NB T) - (T(log k) - h_NN) T_NB",
            np.asarray(r2.value), tol, scene.seed,
        ),
        _report("metric EL: (tau - h_BN) T_NB", np.asarray(r3.value), tol, scene.seed),
    ]


def gv_metric_functional(scene, spec=None, u_tol=1e-8):
    """gv_D(g) = - integral of |H| (d eta)^q(T, B) dV_g (zero off U)."""
    if scene.metric is None:
        raise FoliaError("gv_D needs a metric")
    q = scene.q

    def density(points):
        ctx = geometry.GeometryContext(scene, points, order=2)
        mask = ctx.u_mask(u_tol)
        out = np.zeros(points.shape[1])
        if not np.any(mask):
            return out
        sub = points[:, mask]
        sctx = geometry.GeometryContext(scene, sub, order=2)
        pack = scene.eval_pack(sub, 2)
        domega = pack.omega.d()
        eta_j = domega.contract(
            pack.Tmulti.map(lambda c: c.truncated(domega.order) if isinstance(c, Jet) else c)
        )
        deta = eta_j.d()
        detaq = None
        for _ in range(q):
            detaq = deta if detaq is None else detaq.wedge(deta)
        args = [JetForm(scene.chart.dim, 1, t, "contra") for t in sctx.Ts]
        args += [JetForm(scene.chart.dim, 1, b, "contra") for b in sctx.B]
        val = detaq.evaluate(args)
        val = val.value if isinstance(val, Jet) else val
        g = np.array([[np.asarray(sctx.g[i][j].value) for j in range(ctx.n)] for i in range(ctx.n)])
        detg = np.linalg.det(np.moveaxis(g.reshape(ctx.n, ctx.n, -1), -1, 0))
        out[mask] = -np.asarray(sctx.normH.value) * np.asarray(val) * np.sqrt(detg)
        return out

    return integrate_density(density, scene.chart, spec)
