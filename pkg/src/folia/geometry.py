"""Metric differential geometry on a chart.

Everything is computed through jets so that covariant expressions can be
differentiated again (divergences of divergences, derivatives of mean
curvature) without new evaluation passes.  A :class:`GeometryContext`
bundles the metric, Christoffel symbols, the transverse frame, the
principal normal N = H / |H| of the normal distribution, and a
deterministic orthonormal binormal frame of ker(omega) orthogonal to N.

Vectors are lists of jets in coordinate components; scalars are jets.
"""

import itertools

import numpy as np

from . import jets
from .errors import MetricError, ShapeError, UndefinedFrameError
from .jetlinalg import mat_inverse
from .jets import Jet

__all__ = [
    "GeometryContext",
    "ConnectionAt",
    "connection",
    "extrinsic",
    "eta_metric_values",
    "d_eta_table",
    "gv_density_metric",
    "sigma_invariants",
    "sigma_sum",
    "warped_product_scene",
    "twisted_product_scene",
]

U_TOL = 1e-8  # |H| threshold below which N and B are undefined


def _jsum(terms):
    acc = None
    for t in terms:
        acc = t if acc is None else acc + t
    return acc


class GeometryContext:
    """Jet-level extrinsic geometry of a framed scene at a point batch."""

    def __init__(self, scene, points, order=None):
        if scene.metric is None:
            raise MetricError("scene has no compatible metric")
        self.scene = scene
        self.points = np.asarray(points, dtype=float)
        self.order = scene.jet_order if order is None else order
        self.n = scene.chart.dim
        self.q = scene.q
        self._cache = {}

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    # -- metric and connection ------------------------------------------------

    @property
    def g(self):
        return self._get("g", lambda: self.scene.metric.eval_jets(self.points, self.order))

    @property
    def g_inv(self):
        return self._get("g_inv", lambda: mat_inverse(self.g))

    @property
    def gamma(self):
        """Christoffel symbols Gamma[k][i][j] (jets, one order below g)."""

        def build():
            n, g, ginv = self.n, self.g, self.g_inv
            dg = [[[g[j][l].diff(i) for l in range(n)] for j in range(n)] for i in range(n)]
            gamma = []
            for k in range(n):
                rows = []
                for i in range(n):
                    row = []
                    for j in range(n):
                        acc = _jsum(
                            ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j])
                            for l in range(n)
                        )
                        row.append(0.5 * acc)
                    rows.append(row)
                gamma.append(rows)
            return gamma

        return self._get("gamma", build)

    @property
    def Ts(self):
        """Transverse frame as lists of jet components."""

        def build():
            out = []
            for v in self.scene.frame:
                jf = v.eval_jets(self.points, self.order)
                out.append(list(jf.comps))
            return out

        return self._get("Ts", build)

    # -- basic covariant operations --------------------------------------------

    def dot(self, X, Y):
        """g(X, Y) for coordinate-component vectors of jets."""
        g = self.g
        return _jsum(g[i][j] * X[i] * Y[j] for i in range(self.n) for j in range(self.n))

    def scalar_derivative(self, X, f):
        """X(f) for a jet scalar f."""
        return _jsum(X[k] * f.diff(k) for k in range(self.n))

    def nabla(self, X, Y):
        """Levi-Civita covariant derivative (nabla_X Y) in components."""
        n, gamma = self.n, self.gamma
        out = []
        for k in range(n):
            dY = _jsum(X[j] * Y[k].diff(j) for j in range(n))
            corr = _jsum(
                X[i] * gamma[k][i][j] * Y[j] for i in range(n) for j in range(n)
            )
            out.append(dY + corr)
        return out

    def bracket(self, X, Y):
        n = self.n
        return [
            _jsum(X[j] * Y[k].diff(j) - Y[j] * X[k].diff(j) for j in range(n))
            for k in range(n)
        ]

    def divergence(self, X):
        """Div X = d_k X^k + Gamma^k_{k m} X^m."""
        n, gamma = self.n, self.gamma
        return _jsum(X[k].diff(k) for k in range(n)) + _jsum(
            gamma[k][k][m] * X[m] for k in range(n) for m in range(n)
        )

    def perp_coeffs(self, X):
        """Coefficients of the projection onto span(T_i) (orthonormal)."""
        return [self.dot(X, T) for T in self.Ts]

    def project_tangent(self, X):
        """Projection onto D = ker(omega), via X - sum <X, T_i> T_i."""
        coeffs = self.perp_coeffs(X)
        out = list(X)
        for c, T in zip(coeffs, self.Ts):
            out = [o - c * t for o, t in zip(out, T)]
        return out

    # -- extrinsic quantities ---------------------------------------------------

    @property
    def H(self):
        """Mean curvature vector of the normal distribution, tangent to D."""

        def build():
            acc = None
            for T in self.Ts:
                nT = self.nabla(T, T)
                acc = nT if acc is None else [a + b for a, b in zip(acc, nT)]
            return self.project_tangent(acc)

        return self._get("H", build)

    @property
    def normH(self):
        return self._get("normH", lambda: jets.sqrt(self.dot(self.H, self.H)))

    def u_mask(self, tol=U_TOL):
        """Boolean mask of points where |H| exceeds the threshold."""
        h2 = self.dot(self.H, self.H).value
        return np.sqrt(np.maximum(h2, 0.0)) > tol

    def require_u(self, tol=U_TOL):
        if not np.all(self.u_mask(tol)):
            raise UndefinedFrameError(
                "mean curvature below threshold: principal normal undefined"
            )

    @property
    def N(self):
        def build():
            self.require_u()
            inv = self.normH.reciprocal()
            return [h * inv for h in self.H]

        return self._get("N", build)

    def _value_pivots(self, tol=1e-10):
        """Per-point pivot pattern for the binormal Gram-Schmidt.

        Greedy over coordinate basis vectors in fixed index order, in value
        space: accept e_j when its projection onto ker(omega), orthogonal
        to N and to the already accepted vectors, clears the tolerance.
        """
        n, q = self.n, self.q
        npts = int(np.prod(self.points.shape[1:], initial=1))
        g = np.array(
            [[np.asarray(self.g[i][j].value, dtype=float) for j in range(n)] for i in range(n)]
        ).reshape(n, n, npts)
        frame = [np.array([np.asarray(c.value, dtype=float) for c in T]).reshape(n, npts)
                 for T in self.Ts]
        frame.append(np.array([np.asarray(c.value, dtype=float)
                               for c in self.N]).reshape(n, npts))

        def inner(a, b):
            return np.einsum("ijp,ip,jp->p", g, a, b)

        acc = np.zeros((q, n, npts))
        count = np.zeros(npts, dtype=int)
        pattern = np.full((npts, q), -1, dtype=int)
        for j in range(n):
            w = np.zeros((n, npts))
            w[j] = 1.0
            for v in frame:
                w = w - inner(w, v) * v
            for s in range(q):
                w = w - inner(w, acc[s]) * acc[s]
            w2 = inner(w, w)
            take = (w2 > tol) & (count < q)
            if not np.any(take):
                continue
            wn = w / np.sqrt(np.maximum(w2, 1e-300))
            for s in range(q):
                m = take & (count == s)
                if np.any(m):
                    acc[s][:, m] = wn[:, m]
                    pattern[m, s] = j
            count[take] += 1
        if np.any(count < q):
            raise UndefinedFrameError("could not complete the binormal frame")
        return pattern

    def _b_with_pivots(self, pivots):
        """Jet-level Gram-Schmidt over the given coordinate pivot indices."""
        N = self.N
        batch = self.points.shape[1:]
        space = N[0].space
        accepted = []
        for j in pivots:
            cand = [Jet.constant(space, 1.0 if k == j else 0.0, batch) for k in range(self.n)]
            w = self.project_tangent(cand)
            c = self.dot(w, N)
            w = [wi - c * ni for wi, ni in zip(w, N)]
            for b in accepted:
                c = self.dot(w, b)
                w = [wi - c * bi for wi, bi in zip(w, b)]
            w2 = np.asarray(self.dot(w, w).value)
            if np.min(w2) <= 1e-12:
                raise UndefinedFrameError("degenerate binormal pivot")
            inv = jets.sqrt(self.dot(w, w)).reciprocal()
            accepted.append([wi * inv for wi in w])
        cols = [*(self.Ts), self.N, *accepted]
        mat = np.stack(
            [np.stack([np.asarray(c.value, dtype=float) for c in col]) for col in cols],
            axis=1,
        )  # (n, n, *batch)
        det = np.linalg.det(np.moveaxis(mat.reshape(self.n, self.n, -1), -1, 0))
        if np.any(np.abs(det) < 1e-10):
            raise UndefinedFrameError("frame orientation degenerate at a point")
        # pointwise flip of the last binormal; the sign is locally constant,
        # so the flipped field is smooth near every sample
        sign = np.sign(det).reshape(batch)
        accepted[-1] = [w * sign for w in accepted[-1]]
        return accepted

    @property
    def B(self):
        """Deterministic orthonormal frame of ker(omega) orthogonal to N.

        Coordinate basis vectors are projected onto D and against N in
        fixed index order; the pivot pattern is chosen per point, and the
        batch is partitioned by pattern so each group gets smooth jets.
        The last vector is flipped pointwise so that (T, N, B) is
        positively oriented in chart coordinates.
        """

        def build():
            self.require_u()
            pattern = self._value_pivots()
            uniq = np.unique(pattern, axis=0)
            if len(uniq) == 1:
                return self._b_with_pivots(list(uniq[0]))
            # mixed pivots: build per group and merge coefficient columns
            flatpts = self.points.reshape(self.points.shape[0], -1)
            out = None
            for row in uniq:
                idx = np.nonzero((pattern == row).all(axis=1))[0]
                sub = GeometryContext(self.scene, flatpts[:, idx], self.order)
                subB = sub._b_with_pivots(list(row))
                if out is None:
                    out = [
                        [Jet(c.space, np.zeros(c.coeffs.shape[:1] + (flatpts.shape[1],)))
                         for c in b]
                        for b in subB
                    ]
                for bi, b in enumerate(subB):
                    for ci, c in enumerate(b):
                        tgt = out[bi][ci]
                        k = min(tgt.space.ncoeff, c.space.ncoeff)
                        tgt.coeffs[:k, idx] = c.coeffs[:k]
            return [[c for c in b] for b in out]

        return self._get("B", build)

    def h_coeffs(self, X, Y):
        """Second fundamental form of D: components of (nabla_X Y)^perp on T_i."""
        return self.perp_coeffs(self.nabla(X, Y))

    def integrability_coeffs(self, X, Y):
        """2 T_{X,Y} = [X,Y]^perp: components on T_i, halved."""
        br = self.bracket(X, Y)
        return [0.5 * c for c in self.perp_coeffs(br)]

    # -- q = 1 Frenet data --------------------------------------------------------

    def frenet(self):
        """(k, tau, N, B) for q = 1; tau = <nabla_T N, B>."""
        if self.q != 1:
            raise ShapeError("Frenet data is defined for q = 1")
        T = self.Ts[0]
        k = self.normH
        N, B = self.N, self.B[0]
        tau = self.dot(self.nabla(T, N), B)
        return k, tau, N, B


class ConnectionAt:
    """Numeric view of the Levi-Civita connection at a point batch."""

    def __init__(self, gamma_values, g_values, g_inv_values):
        self.gamma = gamma_values
        self.g = g_values
        self.g_inv = g_inv_values


def connection(scene, points, order=2):
    """Christoffel symbols Gamma^k_{ij} = g^{kl}(d_i g_jl + d_j g_il - d_l g_ij)/2."""
    ctx = GeometryContext(scene, points, order)
    n = ctx.n
    gam = np.array(
        [[[np.asarray(ctx.gamma[k][i][j].value) for j in range(n)] for i in range(n)] for k in range(n)]
    )
    g = np.array([[np.asarray(ctx.g[i][j].value) for j in range(n)] for i in range(n)])
    gi = np.array([[np.asarray(ctx.g_inv[i][j].value) for j in range(n)] for i in range(n)])
    return ConnectionAt(gam, g, gi)


class ExtrinsicData:
    """Point-batch extrinsic data of the framed scene on U."""

    def __init__(self, ctx):
        self.ctx = ctx
        self.H = np.stack([np.asarray(h.value) for h in ctx.H])
        self.normH = np.asarray(ctx.normH.value)
        self.N = np.stack([np.asarray(c.value) for c in ctx.N])
        self.B = [np.stack([np.asarray(c.value) for c in b]) for b in ctx.B]
        if ctx.q == 1:
            k, tau, _, _ = ctx.frenet()
            self.k = np.asarray(k.value)
            self.tau = np.asarray(tau.value)


def extrinsic(scene, points, order=None):
    ctx = GeometryContext(scene, points, order)
    ctx.require_u()
    return ExtrinsicData(ctx)


def eta_metric_values(scene, points, order=2):
    """eta = (-1)^(q-1) (H)^flat, as one-form component values."""
    ctx = GeometryContext(scene, points, order)
    sign = (-1.0) ** (ctx.q - 1)
    comps = []
    for i in range(ctx.n):
        c = _jsum(ctx.g[i][j] * ctx.H[j] for j in range(ctx.n))
        comps.append(sign * np.asarray(c.value))
    return np.stack(comps)


def d_eta_table(scene, points, order=None):
    """Frame-pair values of d eta from extrinsic data (all times (-1)^(q-1)).

    Returns a dict of arrays keyed by ("T,B", i, j), ("N,B", i), ("B,B", i, j),
    ("T,T", i, j), ("T,N", i); each equals d eta on that frame pair.
    """
    ctx = GeometryContext(scene, points, order)
    ctx.require_u()
    q, sign = ctx.q, (-1.0) ** (ctx.q - 1)
    Ts, N, B = ctx.Ts, ctx.N, ctx.B
    normH = ctx.normH
    out = {}
    for i in range(q):
        for j in range(q):
            a = ctx.dot(ctx.nabla(Ts[i], N), B[j])
            b = ctx.dot(ctx.nabla(B[j], N), Ts[i])  # <h_{B_j, N}, T_i>
            out[("T,B", i, j)] = sign * np.asarray((normH * (a - b)).value)
    for i in range(q):
        val = normH * ctx.dot(ctx.nabla(N, N), B[i]) - ctx.scalar_derivative(B[i], normH)
        out[("N,B", i)] = sign * np.asarray(val.value)
    for i in range(q):
        for j in range(q):
            val = -(normH * ctx.dot(ctx.bracket(B[i], B[j]), N))
            out[("B,B", i, j)] = sign * np.asarray(val.value)
    for i in range(q):
        for j in range(q):
            val = -(normH * ctx.dot(ctx.bracket(Ts[i], Ts[j]), N))
            out[("T,T", i, j)] = sign * np.asarray(val.value)
    for i in range(q):
        hNN_Ti = ctx.dot(ctx.nabla(N, N), Ts[i])
        val = ctx.scalar_derivative(Ts[i], normH) - normH * hNN_Ti
        out[("T,N", i)] = sign * np.asarray(val.value)
    return out


def frame_matrices(ctx):
    """A1[i][j] = <nabla_{T_i} N, B_j>, A2[i][j] = -<nabla_{B_j} N, T_i> (values)."""
    q = ctx.q
    A1 = np.empty((q, q) + ctx.points.shape[1:])
    A2 = np.empty_like(A1)
    for i in range(q):
        for j in range(q):
            A1[i, j] = np.asarray(ctx.dot(ctx.nabla(ctx.Ts[i], ctx.N), ctx.B[j]).value)
            A2[i, j] = -np.asarray(ctx.dot(ctx.nabla(ctx.B[j], ctx.N), ctx.Ts[i]).value)
    return A1, A2


def gv_density_metric(scene, points, order=None):
    """(eta ^ (d eta)^q)(T, N, B) = -|H|^(q+1) det(A1 + A2) on U."""
    ctx = GeometryContext(scene, points, order)
    ctx.require_u()
    A1, A2 = frame_matrices(ctx)
    M = np.moveaxis(A1 + A2, (0, 1), (-2, -1))
    det = np.linalg.det(M)
    return -(ctx.normH.value ** (ctx.q + 1)) * det


def sigma_invariants(mats, lam):
    """Coefficient of t^lam in det(id + t_1 A_1 + ... + t_n A_n).

    Expands over principal minors: for each size-k subset S of rows and each
    arrangement assigning lam_i rows to matrix A_i, add the determinant of
    the mixed minor.
    """
    mats = [np.asarray(m, dtype=float) for m in mats]
    if len(lam) != len(mats):
        raise ShapeError("multi-degree length must match the number of matrices")
    m = mats[0].shape[0]
    for a in mats:
        if a.shape != (m, m):
            raise ShapeError("matrices must be square and of equal size")
    k = int(sum(lam))
    if k == 0:
        return 1.0
    if k > m:
        return 0.0
    pattern = []
    for which, count in enumerate(lam):
        pattern.extend([which] * int(count))
    total = 0.0
    for S in itertools.combinations(range(m), k):
        for arrangement in set(itertools.permutations(pattern)):
            rows = np.stack(
                [mats[arrangement[r]][S[r], :][list(S)] for r in range(k)]
            )
            total += float(np.linalg.det(rows))
    return total


def sigma_sum(mats, k):
    """sum over |lam| = k of sigma_lam; equals the k-th char coefficient of sum(mats)."""
    n = len(mats)
    total = 0.0
    for lam in itertools.product(range(k + 1), repeat=n):
        if sum(lam) == k:
            total += sigma_invariants(mats, lam)
    return total


# -- product-metric constructors ------------------------------------------------


def warped_product_scene(q, phi_base, base_box=None, fiber_box=None, jet_order=4):
    """Base^(q+1) x_phi Fiber^q with phi a function of the base coordinates.

    Coordinates (x_0 .. x_q, y_1 .. y_q); the leaves (fiber = const) carry
    D, the fibers carry the transverse frame T_i = phi^{-1} d/dy_i; the
    metric is block diag(identity, phi^2 identity).
    """
    return twisted_product_scene(q, phi_base, base_box, fiber_box, jet_order)


def twisted_product_scene(q, phi, base_box=None, fiber_box=None, jet_order=4):
    """Twisted product scene; ``phi`` may depend on all coordinates."""
    from .exterior import increasing_tuples, tuple_index
    from .fields import Chart, ExprField, ExprFormField, MetricField, VectorField, FramedScene

    n = 2 * q + 1
    names = [f"x{i}" for i in range(q + 1)] + [f"y{i}" for i in range(1, q + 1)]
    base_box = base_box or [[-1.0, 1.0]] * (q + 1)
    fiber_box = fiber_box or [[-1.0, 1.0]] * q
    chart = Chart(names, list(base_box) + list(fiber_box))
    phi_f = ExprField.parse(phi, chart) if isinstance(phi, str) else phi

    # omega = phi^q dy_1 ^ ... ^ dy_q; frame T_i = phi^{-1} d/dy_i
    comps = [0.0] * len(increasing_tuples(n, q))
    fiber_idx = tuple(range(q + 1, n))
    phi_pow = phi_f
    for _ in range(q - 1):
        phi_pow = phi_pow * phi_f
    comps[tuple_index(n, q)[fiber_idx]] = phi_pow
    omega = ExprFormField(chart, q, comps)

    frame = []
    for i in range(q):
        vec = [0.0] * n
        vec[q + 1 + i] = 1.0 / phi_f
        frame.append(VectorField(chart, vec))

    entries = [[0.0] * n for _ in range(n)]
    for i in range(q + 1):
        entries[i][i] = 1.0
    for i in range(q + 1, n):
        entries[i][i] = phi_f * phi_f
    metric = MetricField(chart, entries)
    return FramedScene(
        chart,
        omega,
        frame,
        metric=metric,
        jet_order=jet_order,
        declared={"integrable_ker": True},
    )
