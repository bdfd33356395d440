"""Complex-valued forms for transversely holomorphic flows.

Complex objects are pairs of real fields end-to-end: contraction, exterior
derivative and wedge act complex-bilinearly on (real, imaginary) parts.
A flow is formally integrable when omega_c ^ d omega_c = 0, equivalently
the pair of real identities

    omega_1 ^ d omega_1 = omega_2 ^ d omega_2,
    omega_1 ^ d omega_2 = -omega_2 ^ d omega_1;

then eta_c = iota_{T_c} d omega_c satisfies d omega_c = omega_c ^ eta_c,
and the complex number integral of eta_c ^ (d eta_c)^q is the flow's
holomorphic (Bott-type) invariant.  For the weighted diagonal flow on the
unit sphere the closed form is (sum lam_j)^(q+1) / prod lam_j.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import FoliaError, NormalizationError, ShapeError
from .fields import (
    Chart,
    DerivedFormField,
    ExprFormField,
    SigmaLocus,
    VectorField,
    jet_multivector,
)
from .invariants import ResidualReport, _norms
from .jets import Jet
from .quadrature import QuadratureSpec, integrate_density

__all__ = [
    "ComplexFormField",
    "ComplexFrame",
    "bott_invariant_formula",
    "formal_integrability_residual",
    "gv_complex",
    "bott_chart_model",
]


class ComplexJetForm:
    """A pair (real, imaginary) of JetForms with complex-bilinear algebra."""

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        self.re = re
        self.im = im

    def d(self):
        return ComplexJetForm(self.re.d(), self.im.d())

    def wedge(self, other):
        re = self.re.wedge(other.re) - self.im.wedge(other.im)
        im = self.re.wedge(other.im) + self.im.wedge(other.re)
        return ComplexJetForm(re, im)

    def contract(self, tre, tim):
        """iota along the complex multivector tre + i tim."""
        re = self.re.contract(tre) - self.im.contract(tim)
        im = self.re.contract(tim) + self.im.contract(tre)
        return ComplexJetForm(re, im)

    def map(self, fn):
        return ComplexJetForm(self.re.map(fn), self.im.map(fn))

    def values(self):
        return self.re.values() + 1j * self.im.values()


class ComplexFormField:
    """Real/imaginary pair of same-degree form fields."""

    def __init__(self, re, im):
        if re.degree != im.degree or re.chart is not im.chart:
            raise ShapeError("mismatched real and imaginary parts")
        self.re = re
        self.im = im
        self.chart = re.chart
        self.degree = re.degree

    def eval_jets(self, points, order):
        return ComplexJetForm(
            self.re.eval_jets(points, order), self.im.eval_jets(points, order)
        )

    def independence_check(self, points, tol=1e-8):
        """Pointwise linear independence of the real and imaginary parts."""
        a = self.re.eval_jets(points, 0).values()
        b = self.im.eval_jets(points, 0).values()
        # Gram determinant in component coordinates
        gram = (a * a).sum(0) * (b * b).sum(0) - ((a * b).sum(0)) ** 2
        if np.any(gram < tol):
            raise FoliaError("real and imaginary parts not pointwise independent")


@dataclass
class ComplexFrame:
    """T_c = T_1 + i T_2 as a pair of real vector field lists (length q)."""

    re: list
    im: list


def _tmulti(frame_fields, points, order):
    Ts = [v.eval_jets(points, order) for v in frame_fields]
    return jet_multivector(Ts)


def complex_normalization(omega_c, frame, points, order=0):
    """iota_{T_c} omega_c expanded complex-bilinearly, as complex values."""
    oc = omega_c.eval_jets(points, order)
    tre = _tmulti(frame.re, points, order)
    tim = _tmulti(frame.im, points, order)
    c = oc.contract(tre, tim)
    re = c.re.comps[0]
    im = c.im.comps[0]
    re = re.value if isinstance(re, Jet) else re
    im = im.value if isinstance(im, Jet) else im
    return np.asarray(re) + 1j * np.asarray(im)


def eta_complex(omega_c, frame):
    """eta_c = iota_{T_c} d omega_c as a derived complex one-form."""

    def re_fn(points, order):
        oc = omega_c.eval_jets(points, order + 1)
        d = oc.d()
        tre = _tmulti(frame.re, points, order)
        tim = _tmulti(frame.im, points, order)
        return d.contract(tre, tim).re

    def im_fn(points, order):
        oc = omega_c.eval_jets(points, order + 1)
        d = oc.d()
        tre = _tmulti(frame.re, points, order)
        tim = _tmulti(frame.im, points, order)
        return d.contract(tre, tim).im

    chart = omega_c.chart
    return ComplexFormField(
        DerivedFormField(chart, 1, re_fn), DerivedFormField(chart, 1, im_fn)
    )


def formal_integrability_residual(omega_c, frame, points, tol=1e-9):
    """Sampled residuals of formal integrability and its consequences.

    Checks omega_1 ^ d omega_1 - omega_2 ^ d omega_2 and
    omega_1 ^ d omega_2 + omega_2 ^ d omega_1, the unit complex
    normalization, and d omega_c - omega_c ^ eta_c.
    """
    norm = complex_normalization(omega_c, frame, points)
    nerr = float(np.max(np.abs(norm - 1.0)))
    if nerr > 1e-6:
        raise NormalizationError(
            f"iota_(T_c) omega_c deviates from 1 by {nerr:.2e}"
        )
    o1 = omega_c.re.eval_jets(points, 1)
    o2 = omega_c.im.eval_jets(points, 1)
    d1, d2 = o1.d(), o2.d()
    t1 = _trunc0(o1)
    t2 = _trunc0(o2)
    r1 = t1.wedge(d1) - t2.wedge(d2)
    r2 = t1.wedge(d2) + t2.wedge(d1)
    sup1, _ = _norms(r1.values())
    sup2, _ = _norms(r2.values())

    # d omega_c = omega_c ^ eta_c
    oc = omega_c.eval_jets(points, 2)
    doc = oc.d()
    tre = _tmulti(frame.re, points, 1)
    tim = _tmulti(frame.im, points, 1)
    etac = doc.contract(tre, tim)
    back = oc.map(lambda c: c.truncated(etac.re.order) if isinstance(c, Jet) else c).wedge(etac)
    resid = ComplexJetForm(
        doc.re.map(lambda c: c.truncated(back.re.order) if isinstance(c, Jet) else c) - back.re,
        doc.im.map(lambda c: c.truncated(back.im.order) if isinstance(c, Jet) else c) - back.im,
    )
    sup3, _ = _norms(np.abs(resid.values()))
    sup = max(sup1, sup2)
    return ResidualReport(
        "formal integrability",
        sup,
        float(np.sqrt(np.mean(np.abs(r1.values()) ** 2 + np.abs(r2.values()) ** 2))),
        tol,
        extras={
            "normalization_err": nerr,
            "pairing_identity_sup": sup3,
            "real_identity_sup": sup1,
            "imag_identity_sup": sup2,
        },
    )


def _trunc0(jf):
    return jf.map(lambda c: c.truncated(jf.order - 1) if isinstance(c, Jet) else c)


def bott_invariant_formula(lams):
    """(sum lam_j)^(q+1) / prod lam_j for q+1 nonzero weights.

    The convex hull of the weights must not contain the origin (the flow
    hypothesis); inputs violating it are rejected.
    """
    lams = [complex(x) for x in lams]
    if len(lams) < 2:
        raise ShapeError("need at least two weights")
    if any(x == 0 for x in lams):
        raise FoliaError("weights must be nonzero")
    if _hull_contains_origin(lams):
        raise FoliaError("convex hull of the weights contains the origin")
    total = sum(lams)
    prod = 1.0 + 0.0j
    for x in lams:
        prod *= x
    return total ** len(lams) / prod


def _hull_contains_origin(lams):
    pts = np.array([[z.real, z.imag] for z in lams])
    # origin in hull iff no open half-plane through 0 contains all points
    angles = np.arctan2(pts[:, 1], pts[:, 0])
    for theta in angles:
        normal = np.array([math.cos(theta + math.pi / 2), math.sin(theta + math.pi / 2)])
        s = pts @ normal
        if np.all(s >= -1e-12) or np.all(s <= 1e-12):
            # all weights in a closed half-plane; check strictness via support
            continue
    # robust LP-free test: 0 is in the hull iff it cannot be separated;
    # try all edge normals and coordinate axes as candidate separators
    candidates = []
    m = len(pts)
    for i in range(m):
        for j in range(m):
            if i != j:
                e = pts[j] - pts[i]
                candidates.append(np.array([-e[1], e[0]]))
    candidates.extend(pts)
    for n in candidates:
        nn = np.linalg.norm(n)
        if nn < 1e-14:
            continue
        if np.all(pts @ (n / nn) > 1e-12):
            return False
    return True


def gv_complex(omega_c, frame, spec=None, check_points=None):
    """Complex quadrature of eta_c ^ (d eta_c)^q (real and imaginary parts).

    Requires the formal-integrability residual to pass first.
    """
    chart = omega_c.chart
    q = omega_c.degree
    pts = check_points if check_points is not None else chart.sample_points(256, 2024)
    formal_integrability_residual(omega_c, frame, pts)

    def density(points):
        oc = omega_c.eval_jets(points, 2)
        doc = oc.d()
        tre = _tmulti(frame.re, points, 1)
        tim = _tmulti(frame.im, points, 1)
        etac = doc.contract(tre, tim)
        detac = etac.d()
        out = etac.map(lambda c: c.truncated(detac.re.order) if isinstance(c, Jet) else c)
        for _ in range(q):
            out = out.wedge(detac)
        re = out.re.comps[0]
        im = out.im.comps[0]
        re = re.value if isinstance(re, Jet) else re
        im = im.value if isinstance(im, Jet) else im
        return np.stack([np.asarray(re), np.asarray(im)])

    res = integrate_density(density, chart, spec)
    v = np.asarray(res.value)
    return complex(v[0], v[1]), res


def complex_lp_norm_check(b_c, p, metric, spec=None, codim=None):
    """Improper-integral monitor for complex forms: |b|^2 = |re|^2 + |im|^2."""
    from .quadrature import LpReport, _tensor_sum, form_norm_values

    spec = spec or QuadratureSpec()
    chart = b_c.chart
    if codim is None:
        codim = min((s.codim for s in chart.sigma), default=0)
    exponent_ok = (not chart.sigma) or (codim - 1) * (p - 1) >= 1

    def density(points):
        n1, dv = form_norm_values(b_c.re, metric, points)
        n2, _ = form_norm_values(b_c.im, metric, points)
        return (n1**2 + n2**2) ** (p / 2.0) * dv

    res = spec.resolved(chart)
    if not chart.sigma:
        val, _ = _tensor_sum(density, chart, res, 0.0, spec.chunk)
        return LpReport(p, codim, exponent_ok, [(0.0, val)], "finite")
    eps0 = spec.eps0 * float(np.min(chart.widths))
    values = []
    for step in range(spec.schedule_steps):
        eps = eps0 / (2**step)
        val, _ = _tensor_sum(density, chart, res, eps, spec.chunk)
        values.append((eps, val))
    v = [x for _, x in values]
    drift = abs(v[-1] - v[-2]) / max(abs(v[-1]), 1e-30)
    verdict = "finite" if drift < spec.drift_tol else "inconclusive"
    return LpReport(p, codim, exponent_ok, values, verdict)


def bott_chart_model(lam0, lam1, jet_order=4):
    """Chart model of the weighted diagonal flow on the 3-sphere (q = 1).

    Coordinates (psi, alpha, beta) with z_0 = cos(psi) e^(i alpha),
    z_1 = sin(psi) e^(i beta); the two circles psi = 0, pi/2 form the
    codimension-2 singular set.  With real positive weights the flow is
    generated by lam0 d/dalpha + lam1 d/dbeta, and

        omega_c = e^(i(alpha+beta)) [-(lam0 cos^2 psi + lam1 sin^2 psi) dpsi
                    + i sin psi cos psi (lam1 dalpha - lam0 dbeta)]

    annihilates it.  T_c = -e^(-i(alpha+beta)) /
    (lam0 cos^2 psi + lam1 sin^2 psi) d/dpsi gives unit contraction.
    Formal integrability is exact: the model pulls back a holomorphic
    one-form with omega ^ d omega = 0 on C^2.
    """
    if lam0 <= 0 or lam1 <= 0:
        raise FoliaError("the chart model is built for real positive weights")
    chart = Chart(
        ["psi", "alpha", "beta"],
        [[0.0, math.pi / 2], [0.0, 2 * math.pi], [0.0, 2 * math.pi]],
        periodic=[False, True, True],
        sigma=[SigmaLocus(0, 0.0, 2), SigmaLocus(0, math.pi / 2, 2)],
    )
    rho = f"({lam0}*cos(psi)^2 + {lam1}*sin(psi)^2)"
    sc = "sin(psi)*cos(psi)"
    g = "(alpha + beta)"
    omega_re = ExprFormField.parse(
        chart,
        1,
        [f"-{rho}*cos({g})", f"-{sc}*{lam1}*sin({g})", f"{sc}*{lam0}*sin({g})"],
    )
    omega_im = ExprFormField.parse(
        chart,
        1,
        [f"-{rho}*sin({g})", f"{sc}*{lam1}*cos({g})", f"-{sc}*{lam0}*cos({g})"],
    )
    omega_c = ComplexFormField(omega_re, omega_im)
    t_re = VectorField.parse(chart, [f"-cos({g})/{rho}", "0", "0"])
    t_im = VectorField.parse(chart, [f"sin({g})/{rho}", "0", "0"])
    frame = ComplexFrame([t_re], [t_im])
    return omega_c, frame
