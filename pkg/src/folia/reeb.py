"""Rotationally symmetric foliations of the solid torus from a profile f(r).

The scene on the chart (r, theta, t) is

    omega = cos(mu) dt - sin(mu) dr,   T = cos(mu) d/dt - sin(mu) d/dr,

with mu = arctan f'(r); the axis {r = 0} is the codimension-2 singular
set.  Critical profiles solve a third-order Cauchy problem (parameters
A0, A1 = f'(0) != 0, A2 = f''(0)); constrained-critical profiles solve a
fourth-order problem with multiplier lam.  Both are integrated by an
embedded Cash-Karp 4(5) pair with blow-up detection: integration stops
when |f'| exceeds a cap and the crossing radius r0 is located by
bisection on the dense output.

Profile fields evaluate through jets: the state (f, f', f'', ...) is
interpolated between accepted steps (exact at the steps themselves) and
all higher r-derivatives come from the Taylor recurrence of the ODE, so
pipeline residual checks along the trajectory see no interpolation error.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import OdeError, ShapeError
from .fields import Chart, ExprFormField, FramedScene, FuncField, SigmaLocus, VectorField
from .jets import Jet, JetSpace

__all__ = [
    "ReebProfile",
    "solve_cond2",
    "solve_cond3",
    "solve_reduced",
    "reeb_scene",
    "figure_family",
    "cond_a1_from_data",
]

# Cash-Karp embedded 4(5) tableau
_CK_C = (0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8)
_CK_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
)
_CK_B5 = (37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771)
_CK_B4 = (2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4)


def _rhs_cond2(A0):
    def rhs(_, y):
        f, p, s = y
        if p == 0.0:
            raise ZeroDivisionError
        p2 = p * p
        return np.array(
            [p, s,
             2.0 * (p2 - 1.0) / ((1.0 + p2) * p) * s * s
             + A0 * (1.0 + p2) ** 2.5 / (p2 * p)]
        )

    return rhs


def _rhs_cond3(lam):
    def rhs(_, y):
        f, p, s, j = y
        if p == 0.0:
            raise ZeroDivisionError
        p2 = p * p
        one = 1.0 + p2
        return np.array(
            [p, s, j,
             (6.0 * p2 - 7.0) / (p * one) * j * s
             - 2.0 * (3.0 * p2 * p2 - 9.0 * p2 + 2.0) / (one * one * p2) * s**3
             + lam * one / p2 * s]
        )

    return rhs


def _rhs_reduced(tildeA0):
    def rhs(_, y):
        f, p = y
        if p == 0.0:
            raise ZeroDivisionError
        return np.array([p, tildeA0 * ((1.0 + p * p) / p) ** 2])

    return rhs


def _integrate(rhs, y0, cap, rtol, atol, max_r=100.0, h0=1e-4, p_index=1):
    """Cash-Karp 4(5) with |y[p_index]| > cap as the stopping event.

    Returns (rs, ys, derivs, r0, bracket) where r0 is the bisected crossing
    of the cap on the last step's cubic Hermite dense output.
    """
    r, y = 0.0, np.asarray(y0, dtype=float)
    try:
        d = rhs(r, y)
    except ZeroDivisionError:
        raise OdeError("singular right-hand side (f' = 0)", r=0.0) from None
    rs, ys, ds = [r], [y.copy()], [d.copy()]
    h = h0
    while abs(y[p_index]) <= cap:
        if r >= max_r:
            raise OdeError("no blow-up before the safety radius", r=r)
        if h < 1e-14 * max(1.0, r):
            raise OdeError("step size underflow", r=r)
        k = [d]
        try:
            for i in range(1, 6):
                yi = y + h * sum(a * k[m] for m, a in enumerate(_CK_A[i]))
                k.append(rhs(r + _CK_C[i] * h, yi))
            y5 = y + h * sum(b * ki for b, ki in zip(_CK_B5, k))
            y4 = y + h * sum(b * ki for b, ki in zip(_CK_B4, k))
        except ZeroDivisionError:
            h *= 0.5
            continue
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.sqrt(np.mean(((y5 - y4) / scale) ** 2)))
        if err <= 1.0 or h <= 1e-13 * max(1.0, r):
            if np.sign(y5[p_index]) != np.sign(y[p_index]):
                raise OdeError("f' crossed zero (singular equation)", r=r + h)
            r, y = r + h, y5
            try:
                d = rhs(r, y)
            except ZeroDivisionError:
                raise OdeError("singular right-hand side (f' = 0)", r=r) from None
            rs.append(r)
            ys.append(y.copy())
            ds.append(d.copy())
        fac = 0.9 * (1.0 / max(err, 1e-12)) ** 0.2
        h *= min(5.0, max(0.2, fac))

    rs = np.array(rs)
    ys = np.stack(ys)
    ds = np.stack(ds)
    # bisect |p| = cap on the last step's dense output
    ra, rb = rs[-2], rs[-1]

    def pval(x):
        return abs(
            _hermite_scalar(
                ra, rb, ys[-2, p_index], ys[-1, p_index], ds[-2, p_index], ds[-1, p_index], x
            )
        ) - cap

    lo, hi = ra, rb
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if pval(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return rs, ys, ds, 0.5 * (lo + hi), hi - lo


def _hermite_scalar(ra, rb, ya, yb, da, db, x):
    h = rb - ra
    u = (x - ra) / h
    h00 = (1 + 2 * u) * (1 - u) ** 2
    h10 = u * (1 - u) ** 2
    h01 = u * u * (3 - 2 * u)
    h11 = u * u * (u - 1)
    return h00 * ya + h10 * h * da + h01 * yb + h11 * h * db


@dataclass
class ReebProfile:
    """An integrated profile with blow-up radius and jet evaluation."""

    kind: str
    params: dict
    rs: np.ndarray
    ys: np.ndarray
    derivs: np.ndarray
    r0: float
    r0_bracket: float
    cap: float
    rtol: float
    atol: float

    @property
    def state_dim(self):
        return self.ys.shape[1]

    def state_at(self, r):
        """Piecewise cubic Hermite state interpolation (exact at the steps)."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.rs[-1] + 1e-12):
            raise OdeError("query outside the integrated range", r=float(np.max(r)))
        idx = np.clip(np.searchsorted(self.rs, r, side="right") - 1, 0, len(self.rs) - 2)
        ra, rb = self.rs[idx], self.rs[idx + 1]
        out = np.empty((self.state_dim,) + r.shape)
        for c in range(self.state_dim):
            out[c] = _hermite_scalar(
                ra, rb, self.ys[idx, c], self.ys[idx + 1, c],
                self.derivs[idx, c], self.derivs[idx + 1, c], r,
            )
        return out

    def _tail_rhs(self):
        if self.kind == "cond2":
            A0 = self.params["A0"]

            def tail(jets_):
                f, p, s = jets_
                p2 = p * p
                return (
                    2.0 * (p2 - 1.0) / ((1.0 + p2) * p) * s * s
                    + A0 * (1.0 + p2) ** 2.5 / (p2 * p)
                )

        elif self.kind == "cond3":
            lam = self.params["lam"]

            def tail(jets_):
                f, p, s, j = jets_
                p2 = p * p
                one = 1.0 + p2
                return (
                    (6.0 * p2 - 7.0) / (p * one) * j * s
                    - 2.0 * (3.0 * p2 * p2 - 9.0 * p2 + 2.0) / (one * one * p2) * s**3
                    + lam * one / p2 * s
                )

        else:
            tildeA0 = self.params["tildeA0"]

            def tail(jets_):
                f, p = jets_
                return tildeA0 * ((1.0 + p * p) / p) ** 2

        return tail

    def state_jets(self, r, order):
        """1-d jets of the state components at r, via the ODE Taylor recurrence.

        The chain structure f' = p, p' = s, ... closes with the equation's
        right-hand side, so every coefficient beyond the stored state is
        exact given the interpolated base state.
        """
        r = np.asarray(r, dtype=float)
        base = self.state_at(r)
        tail = self._tail_rhs()
        m = self.state_dim
        jets_ = [Jet.constant(JetSpace.get(1, 0), base[c], r.shape) for c in range(m)]
        for o in range(1, order + 1):
            top = tail(jets_)
            new = []
            for c in range(m):
                nxt = jets_[c + 1] if c + 1 < m else top
                space = JetSpace.get(1, o)
                coeffs = np.zeros((o + 1,) + r.shape)
                coeffs[0] = base[c]
                for kk in range(1, o + 1):
                    coeffs[kk] = nxt.coeffs[kk - 1] / kk
                new.append(Jet(space, coeffs))
            jets_ = new
        return jets_

    def mu_derivs(self, r, order):
        """[mu, mu', ..., mu^(order)] at r, mu = arctan f'."""
        from . import jets as J

        st = self.state_jets(r, order)
        mu = J.atan(st[1])
        return [mu.partial((k,)) for k in range(order + 1)]

    # -- residual monitors ------------------------------------------------------

    def cond_a1_residual(self):
        """(mu' sin^2 mu)' sin mu - A0 at the accepted steps (cond2 only)."""
        if self.kind != "cond2":
            raise ShapeError("cond_a1_residual applies to third-order profiles")
        p, s = self.ys[:, 1], self.ys[:, 2]
        j = np.array([d[2] for d in self.derivs])
        return _cond_a1_value(p, s, j) - self.params["A0"]

    def cond3_residual(self, slope_window=1e3):
        """((mu' sin^2 mu)' sin mu)' - lam mu' sin mu along the trajectory.

        Evaluated at steps with |f'| <= slope_window: the identity involves
        a double cancellation of terms of relative size |f'|^2, so the last
        sliver before blow-up is numerically indeterminate in double
        precision and is excluded from the monitor.
        """
        if self.kind != "cond3":
            raise ShapeError("cond3_residual applies to fourth-order profiles")
        lam = self.params["lam"]
        mask = np.abs(self.ys[:, 1]) <= slope_window
        rs = self.rs[mask]
        st = self.state_jets(rs, 1)
        from . import jets as J

        p = st[1]
        a1 = _cond_a1_jet(st)
        lhs = a1.partial((1,))
        mu_p = st[2] / (1.0 + p * p)
        sinmu = p / J.sqrt(1.0 + p * p)
        rhs = lam * (mu_p * sinmu).value
        return lhs - rhs

    def first_integral_drift(self):
        """max deviation of 2 mu - sin(2 mu) - 4 tildeA0 r along the trajectory."""
        if self.kind != "reduced":
            raise ShapeError("the first integral belongs to the reduced branch")
        p = self.ys[:, 1]
        mu = np.arctan(p)
        vals = 2.0 * mu - np.sin(2.0 * mu) - 4.0 * self.params["tildeA0"] * self.rs
        return float(np.max(np.abs(vals - vals[0])))

    # -- emission ----------------------------------------------------------------

    def csv_text(self):
        """CSV columns r, f, f', mu, residual (17 significant digits)."""
        if self.kind == "cond2":
            res = self.cond_a1_residual()
        elif self.kind == "cond3":
            res = self.cond3_residual(slope_window=np.inf)
        else:
            p = self.ys[:, 1]
            mu = np.arctan(p)
            v = 2.0 * mu - np.sin(2.0 * mu) - 4.0 * self.params["tildeA0"] * self.rs
            res = v - v[0]
        lines = ["r,f,f_prime,mu,residual"]
        for i in range(len(self.rs)):
            row = (self.rs[i], self.ys[i, 0], self.ys[i, 1],
                   math.atan(self.ys[i, 1]), res[i])
            lines.append(",".join(f"{x:.17g}" for x in row))
        return "\n".join(lines) + "\n"

    def summary(self):
        out = {
            "kind": self.kind,
            "params": dict(self.params),
            "r0": self.r0,
            "r0_bracket": self.r0_bracket,
            "steps": int(len(self.rs)),
            "cap": self.cap,
            "rtol": self.rtol,
        }
        if self.kind == "cond2":
            out["cond_a1_residual_sup"] = float(np.max(np.abs(self.cond_a1_residual())))
        elif self.kind == "cond3":
            out["cond3_residual_sup"] = float(np.max(np.abs(self.cond3_residual())))
        else:
            out["first_integral_drift"] = self.first_integral_drift()
        return out


def _cond_a1_value(p, s, j):
    """(mu' sin^2 mu)' sin mu in terms of f', f'', f'''."""
    p2 = p * p
    one = 1.0 + p2
    d = ((j * p2 + 2.0 * p * s * s) * one - 4.0 * p2 * p * s * s) / one**3
    return d * p / np.sqrt(one)


def _cond_a1_jet(st):
    from . import jets as J

    p, s = st[1], st[2]
    j = st[3] if len(st) > 3 else None
    if j is None:
        raise ShapeError("need f''' in the state")
    p2 = p * p
    one = 1.0 + p2
    d = ((j * p2 + 2.0 * p * s * s) * one - 4.0 * p2 * p * s * s) / (one * one * one)
    return d * p / J.sqrt(one)


def cond_a1_from_data(A1, A2, A3):
    """The constant (mu' sin^2 mu)' sin mu determined by (f', f'', f''') at 0."""
    return float(_cond_a1_value(np.float64(A1), np.float64(A2), np.float64(A3)))


def solve_cond2(A0, A1, A2, rtol=1e-10, atol=1e-12, cap=1e6, max_r=100.0):
    """Critical-profile Cauchy problem: f''' determined by (A0; f', f'')."""
    if A1 == 0:
        raise OdeError("initial slope A1 must be nonzero")
    rs, ys, ds, r0, br = _integrate(
        _rhs_cond2(A0), [0.0, A1, A2], cap, rtol, atol, max_r
    )
    return ReebProfile("cond2", {"A0": A0, "A1": A1, "A2": A2}, rs, ys, ds, r0, br, cap, rtol, atol)


def solve_cond3(lam, A1, A2, A3, rtol=1e-10, atol=1e-12, cap=1e6, max_r=100.0):
    """Constrained-critical Cauchy problem with multiplier lam."""
    if A1 == 0:
        raise OdeError("initial slope A1 must be nonzero")
    rs, ys, ds, r0, br = _integrate(
        _rhs_cond3(lam), [0.0, A1, A2, A3], cap, rtol, atol, max_r
    )
    return ReebProfile(
        "cond3", {"lam": lam, "A1": A1, "A2": A2, "A3": A3}, rs, ys, ds, r0, br, cap, rtol, atol
    )


def solve_reduced(tildeA0, A1, rtol=1e-12, atol=1e-14, cap=1e6, max_r=100.0):
    """Reduced branch f'' = tildeA0 ((1 + f'^2)/f')^2 with its first integral."""
    if A1 == 0:
        raise OdeError("initial slope A1 must be nonzero")
    if tildeA0 == 0:
        raise OdeError(
            "tildeA0 = 0 gives a linear profile with no asymptote (not critical)"
        )
    rs, ys, ds, r0, br = _integrate(
        _rhs_reduced(tildeA0), [0.0, A1], cap, rtol, atol, max_r
    )
    return ReebProfile(
        "reduced", {"tildeA0": tildeA0, "A1": A1}, rs, ys, ds, r0, br, cap, rtol, atol
    )


class ProfileScalarField(FuncField):
    """mu(r) (or functions of it) as a chart scalar field through profile jets."""

    def __init__(self, profile, component):
        self.profile = profile
        self.component = component  # "cos_mu" | "sin_mu" | "mu"

        def fn(env):
            u = env["r"]
            order = u.order
            derivs = self.profile.mu_derivs(np.asarray(u.value), order)
            mu = u.compose_derivs(derivs)
            from . import jets as J

            if self.component == "mu":
                return mu
            return J.cos(mu) if self.component == "cos_mu" else J.sin(mu)

        super().__init__(fn)


def reeb_scene(profile, r_max_frac=0.95, jet_order=4, nsamples=256, seed=2024):
    """The framed scene of a profile on (r, theta, t), axis excluded.

    theta is carried but inert (all fields are theta-independent), matching
    the solid-torus picture; integrating over it contributes 2 pi.
    """
    r_hi = r_max_frac * profile.rs[-1]
    chart = Chart(
        ["r", "theta", "t"],
        [[0.0, r_hi], [0.0, 2 * math.pi], [0.0, 2 * math.pi]],
        periodic=[False, True, True],
        sigma=[SigmaLocus(0, 0.0, 2)],
    )
    cosmu = ProfileScalarField(profile, "cos_mu")
    sinmu = ProfileScalarField(profile, "sin_mu")
    omega = ExprFormField(chart, 1, [-1 * sinmu, 0.0, cosmu])
    T = VectorField(chart, [-1 * sinmu, 0.0, cosmu])
    return FramedScene(
        chart,
        omega,
        [T],
        jet_order=jet_order,
        nsamples=nsamples,
        seed=seed,
        declared={"integrable_ker": True},
    )


def figure_family(A0=1.0, A2=0.0, A1_list=(0.125, 0.25, 0.375, 0.5, 0.625), **kw):
    """The five-profile blow-up family; returns (profiles, manifest dict)."""
    profiles = [solve_cond2(A0, a1, A2, **kw) for a1 in A1_list]
    manifest = {
        "family": "cond2",
        "A0": A0,
        "A2": A2,
        "profiles": [p.summary() for p in profiles],
    }
    return profiles, manifest
