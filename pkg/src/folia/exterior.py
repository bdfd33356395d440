"""Pointwise alternating algebra in dimension n.

Alternating tensors are stored densely over strictly increasing
multi-indices in lexicographic order.  All sign bookkeeping goes through a
single merge/parity routine, shared by wedge, contraction and Hodge star.

The combinatorial kernels (:func:`wedge_comps`, :func:`contract_comps`,
:func:`eval_comps`) are generic over their scalar ring: components may be
floats, numpy arrays over a batch of points, or :class:`~folia.jets.Jet`
values.  :class:`AltTensor` wraps the numeric case; the field layer reuses
the same kernels with jet components.
"""

import itertools
from functools import lru_cache

import numpy as np

from .errors import MetricError, ShapeError

__all__ = [
    "increasing_tuples",
    "tuple_index",
    "merge_sign",
    "wedge_comps",
    "contract_comps",
    "eval_comps",
    "AltTensor",
    "PointMetric",
    "wedge",
    "contract",
    "hodge",
    "musical",
]


@lru_cache(maxsize=None)
def increasing_tuples(n, k):
    """Strictly increasing index tuples of length k from range(n), lex order."""
    if k < 0 or k > n:
        return ()
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=None)
def tuple_index(n, k):
    return {t: i for i, t in enumerate(increasing_tuples(n, k))}


@lru_cache(maxsize=None)
def merge_sign(a, b):
    """Sign of sorting the concatenation a + b; 0 if indices repeat.

    Returns (sign, merged_tuple).  Single authoritative parity routine.
    """
    if set(a) & set(b):
        return 0, None
    merged = a + b
    order = sorted(range(len(merged)), key=merged.__getitem__)
    sign = 1
    perm = list(order)
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, cyc = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            cyc += 1
        if cyc % 2 == 0:
            sign = -sign
    return sign, tuple(sorted(merged))


@lru_cache(maxsize=None)
def _wedge_table(n, ka, kb):
    """List of (out_index, a_index, b_index, sign) for a ka-wedge-kb product."""
    out_index = tuple_index(n, ka + kb)
    table = []
    for ia, ta in enumerate(increasing_tuples(n, ka)):
        for ib, tb in enumerate(increasing_tuples(n, kb)):
            s, merged = merge_sign(ta, tb)
            if s:
                table.append((out_index[merged], ia, ib, s))
    return tuple(table)


@lru_cache(maxsize=None)
def _contract_table(n, q, r):
    """List of (out_index, t_index, a_index, sign) for iota_T on an r-form.

    For T expanded over increasing q-tuples J and a over r-tuples, the
    component of the contraction on the increasing (r-q)-tuple K is
    sum_J T^J * sign(J, K) * a_{sort(J+K)}: inserting T's vectors in the
    leading argument slots.
    """
    a_index = tuple_index(n, r)
    table = []
    for ik, tk in enumerate(increasing_tuples(n, r - q)):
        for ij, tj in enumerate(increasing_tuples(n, q)):
            s, merged = merge_sign(tj, tk)
            if s:
                table.append((ik, ij, a_index[merged], s))
    return tuple(table)


def wedge_comps(n, ka, kb, a, b):
    """Component list of the wedge product; scalars only need + and *."""
    nout = len(increasing_tuples(n, ka + kb))
    out = [None] * nout
    for io, ia, ib, s in _wedge_table(n, ka, kb):
        term = a[ia] * b[ib] if s == 1 else -(a[ia] * b[ib])
        out[io] = term if out[io] is None else out[io] + term
    return out


def contract_comps(n, q, r, tcomps, acomps):
    """Components of iota_T a for a q-vector T and an r-form a (r >= q)."""
    nout = len(increasing_tuples(n, r - q))
    out = [None] * nout
    for io, it, ia, s in _contract_table(n, q, r):
        term = tcomps[it] * acomps[ia] if s == 1 else -(tcomps[it] * acomps[ia])
        out[io] = term if out[io] is None else out[io] + term
    return out


def multivector_comps(n, vectors):
    """Increasing-index components of v_1 ^ ... ^ v_q from component lists."""
    comps = list(vectors[0])
    for k, v in enumerate(vectors[1:], start=1):
        comps = wedge_comps(n, k, 1, comps, list(v))
    return comps


def eval_comps(n, k, comps, vectors):
    """Evaluate a k-form with components ``comps`` on k vector component lists.

    alpha(v_1, ..., v_k) = sum_I alpha_I det[ v_a[i] ]_{i in I, a}.
    """
    if k == 0:
        return comps[0]
    vcomps = multivector_comps(n, vectors)
    out = None
    for i in range(len(comps)):
        term = comps[i] * vcomps[i]
        out = term if out is None else out + term
    return out


# -- numeric wrappers ---------------------------------------------------------


class AltTensor:
    """Alternating k-tensor at a point (or batch), dense numeric components.

    variance is "co" for forms, "contra" for multivectors.  Components are
    indexed by :func:`increasing_tuples` order; trailing axes of ``comps``
    are a broadcastable batch.
    """

    __array_ufunc__ = None

    def __init__(self, dim, degree, comps, variance="co"):
        if not 0 <= degree <= dim:
            raise ShapeError(f"degree {degree} out of range for dimension {dim}")
        if variance not in ("co", "contra"):
            raise ShapeError(f"unknown variance {variance!r}")
        comps = np.asarray(comps, dtype=float)
        nexp = len(increasing_tuples(dim, degree))
        if comps.shape[0] != nexp if comps.ndim else nexp != 1:
            raise ShapeError(
                f"expected {nexp} components for degree {degree} in dim {dim}"
            )
        self.dim = dim
        self.degree = degree
        self.variance = variance
        self.comps = comps

    @staticmethod
    def scalar(dim, value, variance="co"):
        return AltTensor(dim, 0, np.atleast_1d(np.asarray(value, float)), variance)

    @staticmethod
    def basis_form(dim, indices):
        """dx^{i_1} ^ ... ^ dx^{i_k} for a strictly increasing tuple."""
        k = len(indices)
        comps = np.zeros(len(increasing_tuples(dim, k)))
        comps[tuple_index(dim, k)[tuple(indices)]] = 1.0
        return AltTensor(dim, k, comps)

    @staticmethod
    def basis_vector(dim, i):
        comps = np.zeros(dim)
        comps[i] = 1.0
        return AltTensor(dim, 1, comps, "contra")

    def __add__(self, other):
        self._check_like(other)
        return AltTensor(self.dim, self.degree, self.comps + other.comps, self.variance)

    def __sub__(self, other):
        self._check_like(other)
        return AltTensor(self.dim, self.degree, self.comps - other.comps, self.variance)

    def __mul__(self, scalar):
        return AltTensor(self.dim, self.degree, self.comps * scalar, self.variance)

    __rmul__ = __mul__

    def __neg__(self):
        return AltTensor(self.dim, self.degree, -self.comps, self.variance)

    def _check_like(self, other):
        if (
            not isinstance(other, AltTensor)
            or other.dim != self.dim
            or other.degree != self.degree
            or other.variance != self.variance
        ):
            raise ShapeError("operands differ in dim, degree or variance")

    def __call__(self, *vectors):
        """Evaluate on vectors given as AltTensors of degree 1 or arrays."""
        if len(vectors) != self.degree:
            raise ShapeError(f"need {self.degree} arguments, got {len(vectors)}")
        vcomps = []
        for v in vectors:
            if isinstance(v, AltTensor):
                if v.degree != 1:
                    raise ShapeError("arguments must be vectors")
                vcomps.append(list(v.comps))
            else:
                vcomps.append(list(np.asarray(v, float)))
        if self.degree == 0:
            return self.comps[0]
        return eval_comps(self.dim, self.degree, list(self.comps), vcomps)


def wedge(a, b):
    """Graded-commutative wedge product of same-variance tensors."""
    if a.dim != b.dim or a.variance != b.variance:
        raise ShapeError("wedge operands differ in dim or variance")
    if a.degree + b.degree > a.dim:
        raise ShapeError("wedge degree exceeds dimension")
    comps = wedge_comps(a.dim, a.degree, b.degree, list(a.comps), list(b.comps))
    comps = [np.asarray(c, float) for c in comps]
    return AltTensor(a.dim, a.degree + b.degree, np.stack(comps), a.variance)


def contract(T, a):
    """iota_T a = a(T_1, ..., T_q, . , ..., .) for a contravariant q-tensor T."""
    if not (T.variance == "contra" and a.variance == "co"):
        raise ShapeError("contract needs a contravariant T and a covariant a")
    if T.dim != a.dim:
        raise ShapeError("contract operands differ in dim")
    if a.degree < T.degree:
        raise ShapeError("degree underflow in contraction")
    comps = contract_comps(a.dim, T.degree, a.degree, list(T.comps), list(a.comps))
    comps = [np.asarray(c, float) for c in comps]
    return AltTensor(a.dim, a.degree - T.degree, np.stack(comps))


class PointMetric:
    """Symmetric positive-definite metric at a point, with an orientation sign."""

    def __init__(self, g, orientation=1):
        g = np.asarray(g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise MetricError("metric must be a square matrix")
        if not np.allclose(g, g.T, atol=1e-12 * max(1.0, np.abs(g).max())):
            raise MetricError("metric is not symmetric")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError as exc:
            raise MetricError("metric is not positive definite") from exc
        if orientation not in (1, -1):
            raise MetricError("orientation must be +1 or -1")
        self.dim = g.shape[0]
        self.g = g
        self.g_inv = np.linalg.inv(g)
        self.det = float(np.linalg.det(g))
        self.orientation = orientation

    def compound_inv(self, k):
        """k-th compound of g^{-1}: Gram matrix of raised increasing k-tuples."""
        tuples = increasing_tuples(self.dim, k)
        m = np.empty((len(tuples), len(tuples)))
        for i, ti in enumerate(tuples):
            for j, tj in enumerate(tuples):
                m[i, j] = np.linalg.det(self.g_inv[np.ix_(ti, tj)]) if k else 1.0
        return m

    def inner(self, a, b):
        """<a, b>_g for covariant tensors of equal degree."""
        if a.degree != b.degree or a.variance != "co" or b.variance != "co":
            raise ShapeError("inner product needs covariant tensors of equal degree")
        m = self.compound_inv(a.degree)
        return np.einsum("i...,ij,j...->...", a.comps, m, b.comps)

    def norm(self, a):
        return np.sqrt(self.inner(a, a))

    def volume_form(self):
        n = self.dim
        comps = np.zeros(1)
        comps[0] = self.orientation * np.sqrt(self.det)
        return AltTensor(n, n, comps)


def hodge(a, metric):
    """Hodge star: the unique (n-k)-form with b ^ *a = <b, a>_g dV_g."""
    if a.variance != "co":
        raise ShapeError("hodge star acts on covariant tensors")
    n, k = a.dim, a.degree
    if metric.dim != n:
        raise ShapeError("metric dimension mismatch")
    raised = metric.compound_inv(k) @ np.asarray(a.comps, float).reshape(len(increasing_tuples(n, k)), -1)
    raised = raised.reshape(a.comps.shape)
    out_tuples = increasing_tuples(n, n - k)
    out_index = tuple_index(n, n - k)
    out = np.zeros((len(out_tuples),) + a.comps.shape[1:])
    scale = metric.orientation * np.sqrt(metric.det)
    for i, ti in enumerate(increasing_tuples(n, k)):
        comp = tuple(sorted(set(range(n)) - set(ti)))
        s, _ = merge_sign(ti, comp)
        out[out_index[comp]] += s * scale * raised[i]
    return AltTensor(n, n - k, out)


def musical(x, metric, direction):
    """Index raising/lowering on degree-1 tensors: "flat" or "sharp"."""
    if x.degree != 1:
        raise ShapeError("musical isomorphisms act on degree-1 tensors")
    if direction == "flat":
        if x.variance != "contra":
            raise ShapeError("flat lowers a vector")
        comps = np.einsum("ij,j...->i...", metric.g, x.comps)
        return AltTensor(x.dim, 1, comps, "co")
    if direction == "sharp":
        if x.variance != "co":
            raise ShapeError("sharp raises a one-form")
        comps = np.einsum("ij,j...->i...", metric.g_inv, x.comps)
        return AltTensor(x.dim, 1, comps, "contra")
    raise ShapeError(f"unknown direction {direction!r}")
