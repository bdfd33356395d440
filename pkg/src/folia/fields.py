"""Chart-wide calculus: scalar/vector/form fields, exterior and Lie
derivatives through jets, and the framed scene (omega, T).

A :class:`Chart` is a coordinate box, possibly periodic per coordinate,
with an excluded singular set given by loci ``{coordinate = value}`` of a
declared codimension.  Fields evaluate to jet-valued alternating tensors
(:class:`JetForm`) at batches of points; the exterior derivative shifts
Taylor coefficients, so one evaluation pass at order K supports K nested
derivatives.
"""

from functools import lru_cache

import numpy as np

from . import exprlang, jets
from .errors import (
    FoliaError,
    JetOrderError,
    NormalizationError,
    OutsideDomainError,
    ShapeError,
)
from .exterior import (
    contract_comps,
    increasing_tuples,
    multivector_comps,
    tuple_index,
    wedge_comps,
)
from .jetlinalg import mat_inverse
from .jets import Jet, JetSpace

__all__ = [
    "Chart",
    "SigmaLocus",
    "JetForm",
    "ScalarField",
    "ExprField",
    "FuncField",
    "ConstField",
    "FormField",
    "ExprFormField",
    "DerivedFormField",
    "VectorField",
    "MetricField",
    "FramedScene",
    "exterior_derivative",
    "lie_derivative",
    "eta",
    "gauge_transform",
]

_HALTON_PRIMES = (2, 3, 5, 7, 11, 13, 17)


class SigmaLocus:
    """Singular locus {coordinate = value} with a codimension tag."""

    __slots__ = ("coord", "value", "codim")

    def __init__(self, coord, value, codim):
        self.coord = coord
        self.value = value
        self.codim = codim

    def __repr__(self):
        return f"SigmaLocus(coord={self.coord}, value={self.value}, codim={self.codim})"


class Chart:
    """Coordinate box with periodic flags and an excluded singular set."""

    def __init__(self, names, box, periodic=None, sigma=()):
        self.names = tuple(names)
        self.dim = len(self.names)
        box = np.asarray(box, dtype=float)
        if box.shape != (self.dim, 2):
            raise ShapeError(f"box must have shape ({self.dim}, 2)")
        if np.any(box[:, 0] >= box[:, 1]):
            raise ShapeError("box intervals need lo < hi")
        self.box = box
        self.periodic = tuple(bool(p) for p in (periodic or [False] * self.dim))
        self.sigma = tuple(sigma)
        for s in self.sigma:
            lo, hi = box[s.coord]
            if not (lo <= s.value <= hi):
                raise ShapeError("sigma locus lies outside the box")

    @property
    def widths(self):
        return self.box[:, 1] - self.box[:, 0]

    def coord_index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise FoliaError(f"unknown coordinate '{name}'") from None

    def validate_points(self, points, tube=0.0):
        """Reject evaluation on (or within ``tube`` of) the singular set."""
        points = np.asarray(points, dtype=float)
        if points.shape[0] != self.dim:
            raise ShapeError(f"points must have shape ({self.dim}, ...)")
        for s in self.sigma:
            bad = np.abs(points[s.coord] - s.value) <= tube
            if np.any(bad):
                raise OutsideDomainError(
                    f"evaluation on the singular locus {self.names[s.coord]}"
                    f" = {s.value}"
                )
        return points

    def sample_points(self, count, seed=0, sigma_tube_rel=1e-3):
        """Deterministic low-discrepancy sample, excluding a tube around sigma.

        Scrambled Halton: per-coordinate digit permutations drawn from the
        seed, so different seeds decorrelate while staying reproducible.
        """
        if self.dim > len(_HALTON_PRIMES):
            raise ShapeError("sampling supports at most 7 coordinates")
        rng = np.random.default_rng(seed)
        perms = []
        for d in range(self.dim):
            p = _HALTON_PRIMES[d]
            perm = np.arange(p)
            tail = rng.permutation(p - 1) + 1
            perm[1:] = tail
            perms.append(perm)
        tubes = sigma_tube_rel * self.widths
        out = np.empty((self.dim, count))
        got, index = 0, 1
        margin = 1e-4
        while got < count:
            u = np.array(
                [
                    _scrambled_radical_inverse(index, _HALTON_PRIMES[d], perms[d])
                    for d in range(self.dim)
                ]
            )
            x = self.box[:, 0] + (margin + (1 - 2 * margin) * u) * self.widths
            index += 1
            ok = True
            for s in self.sigma:
                if abs(x[s.coord] - s.value) <= tubes[s.coord]:
                    ok = False
                    break
            if ok:
                out[:, got] = x
                got += 1
        return out

    def grid_axes(self, resolution):
        """Per-coordinate quadrature nodes/weights: trapezoid if periodic,
        composite Gauss-Legendre otherwise."""
        axes = []
        for d in range(self.dim):
            lo, hi = self.box[d]
            m = int(resolution[d])
            if self.periodic[d]:
                x = lo + (hi - lo) * np.arange(m) / m
                w = np.full(m, (hi - lo) / m)
            else:
                per_panel = 8
                panels = max(1, int(np.ceil(m / per_panel)))
                xg, wg = np.polynomial.legendre.leggauss(per_panel)
                edges = np.linspace(lo, hi, panels + 1)
                mid = 0.5 * (edges[:-1] + edges[1:])
                half = 0.5 * (edges[1:] - edges[:-1])
                x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
                w = (half[:, None] * wg[None, :]).ravel()
            axes.append((x, w))
        return axes


def _scrambled_radical_inverse(index, base, perm):
    inv, f = 0.0, 1.0 / base
    while index > 0:
        inv += f * perm[index % base]
        index //= base
        f /= base
    return inv


# -- jet-valued alternating tensors -------------------------------------------


@lru_cache(maxsize=None)
def _d_table(n, k):
    """Triples (out_index, var, src_index, sign) of the exterior derivative.

    (da)_{j_0 < ... < j_k} = sum_m (-1)^m  d/dx_{j_m}  a_{J minus j_m}.
    """
    src_index = tuple_index(n, k)
    table = []
    for io, J in enumerate(increasing_tuples(n, k + 1)):
        for m, var in enumerate(J):
            rest = J[:m] + J[m + 1 :]
            table.append((io, var, src_index[rest], (-1) ** m))
    return tuple(table)


class JetForm:
    """Alternating tensor whose components are jets over a point batch."""

    __slots__ = ("dim", "degree", "variance", "comps")

    def __init__(self, dim, degree, comps, variance="co"):
        self.dim = dim
        self.degree = degree
        self.variance = variance
        self.comps = list(comps)
        if len(self.comps) != len(increasing_tuples(dim, degree)):
            raise ShapeError("component count does not match degree")

    @property
    def order(self):
        return min(c.order for c in self.comps if isinstance(c, Jet))

    def values(self):
        return np.stack([np.asarray(c.value if isinstance(c, Jet) else c) for c in self.comps])

    def map(self, fn):
        return JetForm(self.dim, self.degree, [fn(c) for c in self.comps], self.variance)

    def __add__(self, other):
        if other.degree != self.degree or other.variance != self.variance:
            raise ShapeError("mismatched jet forms")
        return JetForm(
            self.dim,
            self.degree,
            [a + b for a, b in zip(self.comps, other.comps)],
            self.variance,
        )

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self.map(lambda c: -c)

    def __mul__(self, scalar):
        return self.map(lambda c: c * scalar)

    __rmul__ = __mul__

    def wedge(self, other):
        if other.variance != self.variance:
            raise ShapeError("wedge needs equal variance")
        if self.degree + other.degree > self.dim:
            raise ShapeError("wedge degree exceeds dimension")
        comps = wedge_comps(self.dim, self.degree, other.degree, self.comps, other.comps)
        return JetForm(self.dim, self.degree + other.degree, comps, self.variance)

    def d(self):
        """Exterior derivative; drops the jet order by one."""
        if self.variance != "co":
            raise ShapeError("d acts on covariant forms")
        if self.degree >= self.dim:
            raise ShapeError("d of a top-degree form")
        if self.order < 1:
            raise JetOrderError("insufficient jet order for d")
        nout = len(increasing_tuples(self.dim, self.degree + 1))
        out = [None] * nout
        for io, var, src, sign in _d_table(self.dim, self.degree):
            c = self.comps[src]
            if not isinstance(c, Jet):
                continue
            term = c.diff(var) if sign == 1 else -c.diff(var)
            out[io] = term if out[io] is None else out[io] + term
        order = self.order - 1
        space = JetSpace.get(self.dim, order)
        batch = None
        for c in self.comps:
            if isinstance(c, Jet):
                batch = c.batch_shape
                break
        for io in range(nout):
            if out[io] is None:
                out[io] = Jet.constant(space, 0.0, batch or ())
            else:
                out[io] = out[io].truncated(order)
        return JetForm(self.dim, self.degree + 1, out)

    def contract(self, tvector):
        """iota_T self for a contravariant JetForm T (degree q <= degree)."""
        if tvector.variance != "contra" or self.variance != "co":
            raise ShapeError("contract needs contravariant T, covariant form")
        if self.degree < tvector.degree:
            raise ShapeError("degree underflow in contraction")
        comps = contract_comps(
            self.dim, tvector.degree, self.degree, tvector.comps, self.comps
        )
        return JetForm(self.dim, self.degree - tvector.degree, comps)

    def evaluate(self, vectors):
        """Apply to ``degree`` jet-vectors (contravariant degree-1 JetForms)."""
        if len(vectors) != self.degree:
            raise ShapeError("wrong number of arguments")
        if self.degree == 0:
            return self.comps[0]
        mv = multivector_comps(self.dim, [v.comps for v in vectors])
        acc = None
        for c, t in zip(self.comps, mv):
            term = c * t
            acc = term if acc is None else acc + term
        return acc


def jet_multivector(vectors):
    """T_1 ^ ... ^ T_q as a contravariant JetForm."""
    dim = vectors[0].dim
    comps = multivector_comps(dim, [v.comps for v in vectors])
    return JetForm(dim, len(vectors), comps, "contra")


def lie_jet(tmulti, a):
    """Lie derivative along a q-vector at jet level.

    L_T a = d(iota_T a) - (-1)^q iota_T (d a); the composite drops one jet
    order.  Note d(L_T a) = (-1)^(q+1) L_T(d a).  For a top-degree form the
    second term vanishes identically.
    """
    q = tmulti.degree
    sign = (-1.0) ** q
    first = a.contract(tmulti).d()
    if a.degree == a.dim:
        return first
    second = a.d().contract(tmulti.map(lambda c: c.truncated(a.order - 1) if isinstance(c, Jet) else c))
    return first - (sign * second)


# -- scalar fields -------------------------------------------------------------


class ScalarField:
    """A scalar function of the chart coordinates, evaluable on jets."""

    def eval_jets(self, chart, points, order):
        raise NotImplementedError

    def __add__(self, other):
        return _combine("+", self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return _combine("-", self, other)

    def __rsub__(self, other):
        return _combine("-", as_field(other), self)

    def __mul__(self, other):
        return _combine("*", self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _combine("/", self, other)

    def __rtruediv__(self, other):
        return _combine("/", as_field(other), self)

    def __neg__(self):
        return FuncField(lambda env, f=self: -f._from_env(env))

    def _from_env(self, env):
        raise NotImplementedError


def as_field(x):
    if isinstance(x, ScalarField):
        return x
    return ConstField(float(x))


def _combine(op, a, b):
    a, b = as_field(a), as_field(b)

    def fn(env):
        x, y = a._from_env(env), b._from_env(env)
        if op == "+":
            return x + y
        if op == "-":
            return x - y
        if op == "*":
            return x * y
        return x / y

    return FuncField(fn)


class ConstField(ScalarField):
    def __init__(self, value):
        self.value = float(value)

    def eval_jets(self, chart, points, order):
        points = np.asarray(points)
        return Jet.constant(JetSpace.get(chart.dim, order), self.value, points.shape[1:])

    def _from_env(self, env):
        return self.value


class ExprField(ScalarField):
    """Scalar field from a parsed expression plus late-bound parameters."""

    def __init__(self, ast, params=None):
        self.ast = ast
        self.params = dict(params or {})

    @staticmethod
    def parse(src, chart, params=None):
        names = set(chart.names) | set(params or {})
        return ExprField(exprlang.parse(src, names), params)

    def eval_jets(self, chart, points, order):
        env = _coordinate_env(chart, points, order)
        env.update(self.params)
        return exprlang.eval_ast(self.ast, env)

    def _from_env(self, env):
        full = dict(env)
        full.update(self.params)
        return exprlang.eval_ast(self.ast, full)


class FuncField(ScalarField):
    """Scalar field defined by a callable on the coordinate-jet environment."""

    def __init__(self, fn):
        self.fn = fn

    def eval_jets(self, chart, points, order):
        return self.fn(_coordinate_env(chart, points, order))

    def _from_env(self, env):
        return self.fn(env)


def _coordinate_env(chart, points, order):
    points = chart.validate_points(points)
    vars_ = jets.variable_jets(chart.dim, order, points)
    return dict(zip(chart.names, vars_))


class BumpField(ScalarField):
    """Compactly supported cutoff bump, evaluable on jets.

    kind="exp" is the classic exp(1 - 1/(1 - s)) on s = sum u_i^2 < 1
    (infinitely smooth, but slowly converging under spectral quadrature);
    kind="cos" (default) is the separable profile
    prod_i (0.5 (1 + cos(pi u_i)))^power, which is C^(power-1) at the
    support edge and integrates to near machine accuracy at moderate
    resolutions.  u_i = (x_i - center_i)/radius_i, wrapped to the nearest
    period on periodic coordinates.
    """

    def __init__(self, chart, center, radius, coords=None, kind="cos", power=8):
        self.chart = chart
        self.center = np.asarray(center, dtype=float)
        self.radius = np.asarray(radius, dtype=float)
        self.coords = tuple(coords) if coords is not None else tuple(range(chart.dim))
        self.kind = kind
        self.power = int(power)

    def eval_jets(self, chart, points, order):
        env = _coordinate_env(chart, points, order)
        return self._from_env(env)

    def _wrapped(self, env, k, idx):
        u = env[self.chart.names[idx]] - self.center[k]
        if self.chart.periodic[idx]:
            width = self.chart.box[idx, 1] - self.chart.box[idx, 0]
            shift = np.round(np.asarray(u.value) / width) * width
            u = u - shift
        return u * (1.0 / self.radius[k])

    def _from_env(self, env):
        memo = env.setdefault("__memo__", {})
        if self in memo:
            return memo[self]
        out = self._compute(env)
        memo[self] = out
        return out

    def _compute(self, env):
        if self.kind == "cos":
            out = None
            for k, idx in enumerate(self.coords):
                u = self._wrapped(env, k, idx)
                bad = np.broadcast_to(np.asarray(u.value) ** 2 >= 1.0, u.batch_shape)
                f = (0.5 + 0.5 * jets.cos(np.pi * u)) ** self.power
                f.coeffs[(slice(None),) + np.nonzero(bad)] = 0.0
                out = f if out is None else out * f
            return out
        s = None
        for k, idx in enumerate(self.coords):
            u = self._wrapped(env, k, idx)
            s = u * u if s is None else s + u * u
        bad = np.broadcast_to(np.asarray(s.value) >= 1.0 - 1e-3, s.batch_shape)
        w = 1.0 - s
        w.coeffs[(slice(None),) + np.nonzero(bad)] = 0.0
        w.coeffs[(0,) + np.nonzero(bad)] = 1.0  # harmless placeholder off-support
        b = jets.exp(1.0 - w.reciprocal())
        b.coeffs[(slice(None),) + np.nonzero(bad)] = 0.0
        return b


# -- form / vector fields ------------------------------------------------------


class FormField:
    """Degree-k covariant field on a chart; evaluates to a JetForm."""

    def __init__(self, chart, degree):
        self.chart = chart
        self.degree = degree

    def eval_jets(self, points, order):
        raise NotImplementedError

    def values(self, points):
        return self.eval_jets(points, 0).values()


class ExprFormField(FormField):
    def __init__(self, chart, degree, comps, variance="co"):
        super().__init__(chart, degree)
        nexp = len(increasing_tuples(chart.dim, degree))
        comps = [as_field(c) for c in comps]
        if len(comps) != nexp:
            raise ShapeError(f"need {nexp} components, got {len(comps)}")
        self.comps = comps
        self.variance = variance

    @staticmethod
    def parse(chart, degree, sources, params=None, variance="co"):
        return ExprFormField(
            chart,
            degree,
            [ExprField.parse(s, chart, params) for s in sources],
            variance,
        )

    def eval_jets(self, points, order):
        env = _coordinate_env(self.chart, points, order)
        return JetForm(
            self.chart.dim,
            self.degree,
            [_as_jet(c._from_env(env), env) for c in self.comps],
            self.variance,
        )


def _as_jet(x, env):
    if isinstance(x, Jet):
        return x
    probe = next(iter(env.values()))
    return Jet.constant(probe.space, x, probe.batch_shape)


class DerivedFormField(FormField):
    def __init__(self, chart, degree, fn):
        super().__init__(chart, degree)
        self.fn = fn

    def eval_jets(self, points, order):
        return self.fn(points, order)


class VectorField(ExprFormField):
    """Tangent vector field; components in coordinate order."""

    def __init__(self, chart, comps):
        super().__init__(chart, 1, comps, "contra")

    @staticmethod
    def parse(chart, sources, params=None):
        return VectorField(chart, [ExprField.parse(s, chart, params) for s in sources])


class MetricField:
    """Symmetric matrix of scalar fields (entries in coordinate indices)."""

    def __init__(self, chart, entries):
        n = chart.dim
        if len(entries) != n or any(len(r) != n for r in entries):
            raise ShapeError("metric entries must form an n-by-n matrix")
        self.chart = chart
        self.entries = [[as_field(e) for e in row] for row in entries]

    @staticmethod
    def parse(chart, sources, params=None):
        return MetricField(
            chart,
            [[ExprField.parse(s, chart, params) for s in row] for row in sources],
        )

    def eval_jets(self, points, order):
        env = _coordinate_env(self.chart, points, order)
        return [
            [_as_jet(e._from_env(env), env) for e in row] for row in self.entries
        ]


class FrameMetricField(MetricField):
    """Compatible metric declaring {T_i} + an orthonormalized D-frame orthonormal.

    The supplied D-frame is Gram-Schmidt orthonormalized in coordinate
    components (for determinism and conditioning); the metric is then
    g = A^{-T} A^{-1} for the column frame A = [T_1 .. T_q | E_1 .. E_{q+1}].
    """

    def __init__(self, chart, frame, d_frame):
        self.chart = chart
        self.frame = frame
        self.d_frame = d_frame

    def eval_jets(self, points, order):
        env = _coordinate_env(self.chart, points, order)
        n = self.chart.dim
        cols = []
        for v in self.frame:
            cols.append([_as_jet(c._from_env(env), env) for c in v.comps])
        basis = []
        for v in self.d_frame:
            w = [_as_jet(c._from_env(env), env) for c in v.comps]
            for b in basis:
                dot = _dot(w, b)
                w = [wi - dot * bi for wi, bi in zip(w, b)]
            nrm = jets.sqrt(_dot(w, w))
            inv = nrm.reciprocal()
            basis.append([wi * inv for wi in w])
        cols.extend(basis)
        A = [[cols[j][i] for j in range(n)] for i in range(n)]  # columns -> matrix
        Ainv = mat_inverse(A)
        # g = Ainv^T Ainv
        g = [
            [
                _dot([Ainv[k][i] for k in range(n)], [Ainv[k][j] for k in range(n)])
                for j in range(n)
            ]
            for i in range(n)
        ]
        return g


def _dot(a, b):
    acc = a[0] * b[0]
    for x, y in zip(a[1:], b[1:]):
        acc = acc + x * y
    return acc


# -- framed scene ---------------------------------------------------------------


class ScenePack:
    """Jets of everything a pipeline needs at one batch of points."""

    __slots__ = ("omega", "Ts", "Tmulti", "metric")

    def __init__(self, omega, Ts, Tmulti, metric=None):
        self.omega = omega
        self.Ts = Ts
        self.Tmulti = Tmulti
        self.metric = metric


class FramedScene:
    """A chart with a decomposable q-form omega and transverse fields T_i,
    normalized so the full contraction of omega with T_1 ^ ... ^ T_q is 1."""

    def __init__(
        self,
        chart,
        omega,
        frame,
        metric=None,
        frame_forms=None,
        d_frame=None,
        jet_order=4,
        seed=2024,
        nsamples=256,
        declared=None,
    ):
        self.chart = chart
        self.q = len(frame)
        if chart.dim != 2 * self.q + 1:
            raise ShapeError("chart dimension must be 2q + 1")
        if omega.degree != self.q:
            raise ShapeError("omega degree must equal the frame length q")
        self.omega = omega
        self.frame = list(frame)
        self.frame_forms = list(frame_forms) if frame_forms else None
        self.d_frame = list(d_frame) if d_frame else None
        if metric is None and self.d_frame is not None:
            metric = FrameMetricField(chart, self.frame, self.d_frame)
        self.metric = metric
        self.jet_order = jet_order
        self.seed = seed
        self.nsamples = nsamples
        self.declared = dict(declared or {})

    # -- evaluation ----------------------------------------------------------

    def eval_pack(self, points, order, with_metric=False):
        if order > self.jet_order:
            raise JetOrderError(
                f"operation needs jet order {order}, scene allows {self.jet_order}"
            )
        omega = self.omega.eval_jets(points, order)
        Ts = [v.eval_jets(points, order) for v in self.frame]
        Tmulti = jet_multivector(Ts)
        metric = None
        if with_metric:
            if self.metric is None:
                raise FoliaError("scene has no metric")
            metric = self.metric.eval_jets(points, order)
        return ScenePack(omega, Ts, Tmulti, metric)

    def sample_points(self, count=None, seed=None):
        return self.chart.sample_points(
            count or self.nsamples, self.seed if seed is None else seed
        )

    def check_normalization(self, tol=1e-9, points=None):
        pts = points if points is not None else self.sample_points()
        pack = self.eval_pack(pts, 0)
        val = pack.omega.contract(pack.Tmulti).comps[0]
        val = val.value if isinstance(val, Jet) else val
        err = float(np.max(np.abs(val - 1.0)))
        if err > tol:
            raise NormalizationError(
                f"iota_T omega deviates from 1 by {err:.3e} (tol {tol:.1e})"
            )
        return err

    def eta_form(self):
        """eta = iota_T d omega as a derived one-form field."""

        def fn(points, order):
            pack = self.eval_pack(points, order + 1)
            return pack.omega.d().contract(
                pack.Tmulti.map(lambda c: c.truncated(order) if isinstance(c, Jet) else c)
            )

        return DerivedFormField(self.chart, 1, fn)

    def gv_integrand(self):
        """eta ^ (d eta)^q as a derived top-degree field."""

        def fn(points, order):
            pack = self.eval_pack(points, order + 2)
            domega = pack.omega.d()
            eta_j = domega.contract(
                pack.Tmulti.map(lambda c: c.truncated(domega.order) if isinstance(c, Jet) else c)
            )
            deta = eta_j.d()
            out = eta_j.map(lambda c: c.truncated(deta.order) if isinstance(c, Jet) else c)
            for _ in range(self.q):
                out = out.wedge(deta)
            return out

        return DerivedFormField(self.chart, self.chart.dim, fn)


def exterior_derivative(a):
    """d as a field-level operation (evaluates the operand one order higher)."""

    def fn(points, order):
        return a.eval_jets(points, order + 1).d()

    return DerivedFormField(a.chart, a.degree + 1, fn)


def lie_derivative(frame, a):
    """Lie derivative of the form field ``a`` along T_1 ^ ... ^ T_q."""

    def fn(points, order):
        aj = a.eval_jets(points, order + 1)
        Ts = [v.eval_jets(points, order + 1) for v in frame]
        return lie_jet(jet_multivector(Ts), aj)

    return DerivedFormField(a.chart, a.degree - len(frame) + 1, fn)


def eta(scene):
    """The transverse torsion one-form of the scene (checks normalization)."""
    scene.check_normalization()
    return scene.eta_form()


def gauge_transform(scene, C):
    """Rescale the pair: new T_i = C_i^j T_j, new omega = det(C)^{-1} omega.

    C is a q x q matrix of scalar fields, nonsingular on sampled points.
    """
    q = scene.q
    C = [[as_field(e) for e in row] for row in C]
    if q == 1:
        detC = C[0][0]
    elif q == 2:
        detC = C[0][0] * C[1][1] - C[0][1] * C[1][0]
    else:
        raise ShapeError("gauge transform implemented for q <= 2")

    new_frame = []
    for i in range(q):
        row = C[i]

        def vec_fn(env, row=row):
            comps = None
            for j, cf in enumerate(row):
                tj = [
                    _as_jet(c._from_env(env), env) for c in scene.frame[j].comps
                ]
                cj = cf._from_env(env)
                term = [cj * t for t in tj]
                comps = term if comps is None else [a + b for a, b in zip(comps, term)]
            return comps

        new_frame.append(_FuncVectorField(scene.chart, vec_fn))

    def omega_fn(points, order):
        om = scene.omega.eval_jets(points, order)
        env = _coordinate_env(scene.chart, points, order)
        det_j = _as_jet(detC._from_env(env), env)
        vals = np.asarray(det_j.value)
        if np.any(vals == 0):
            raise FoliaError("singular gauge matrix on sampled points")
        inv = det_j.reciprocal()
        return om.map(lambda c: c * inv)

    new_omega = DerivedFormField(scene.chart, scene.q, omega_fn)
    return FramedScene(
        scene.chart,
        new_omega,
        new_frame,
        metric=scene.metric,
        frame_forms=None,
        jet_order=scene.jet_order,
        seed=scene.seed,
        nsamples=scene.nsamples,
        declared=dict(scene.declared),
    )


class _FuncVectorField(FormField):
    def __init__(self, chart, fn):
        super().__init__(chart, 1)
        self.fn = fn
        self.variance = "contra"

    def eval_jets(self, points, order):
        env = _coordinate_env(self.chart, points, order)
        return JetForm(self.chart.dim, 1, self.fn(env), "contra")
