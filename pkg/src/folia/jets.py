"""Forward-mode truncated Taylor arithmetic (jets).

A :class:`Jet` stores the Taylor coefficients of a scalar function at an
evaluation point, for all multi-degrees of total degree <= ``order`` in
``dim`` variables.  Ring operations and composition with the analytic
primitives are exact truncations of the corresponding Taylor series, so any
mixed partial of order <= ``order`` extracted from a composite expression
equals the analytic value up to floating-point rounding.

Coefficients are stored densely over the monomial list of
:class:`JetSpace`.  The leading coefficient axis may be followed by an
arbitrary batch shape, so one Jet can carry a whole grid of evaluation
points; every operation is vectorized over the batch.
"""

import math
from functools import lru_cache

import numpy as np

from .errors import JetDomainError, JetOrderError

__all__ = ["JetSpace", "Jet", "variable_jets", "constant_jet"]


@lru_cache(maxsize=None)
def _monomials(dim, order):
    """All exponent tuples with total degree <= order, sorted by (degree, lex).

    The ordering makes the monomials of degree <= m a prefix of the list for
    any m <= order, so truncation to a lower order is a slice.
    """
    mons = []

    def build(prefix, remaining, slots):
        if slots == 0:
            mons.append(tuple(prefix))
            return
        for e in range(remaining + 1):
            build(prefix + [e], remaining - e, slots - 1)

    for total in range(order + 1):
        batch = []

        def collect(prefix, left, slots):
            if slots == 0:
                if left == 0:
                    batch.append(tuple(prefix))
                return
            for e in range(left + 1):
                collect(prefix + [e], left - e, slots - 1)

        collect([], total, dim)
        mons.extend(sorted(batch))
    return tuple(mons)


class JetSpace:
    """Combinatorial tables for jets of a fixed (dim, order).

    Instances are interned: ``JetSpace.get(dim, order)`` returns a shared
    object holding the monomial list, index lookup, the multiplication
    table (as flat gather/scatter arrays), and differentiation tables.
    """

    _cache = {}

    def __init__(self, dim, order):
        if dim < 1:
            raise ValueError("jet dimension must be >= 1")
        if order < 0:
            raise ValueError("jet order must be >= 0")
        self.dim = dim
        self.order = order
        self.monomials = _monomials(dim, order)
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.ncoeff = len(self.monomials)
        self.degrees = np.array([sum(m) for m in self.monomials])
        self._mul_table = None
        self._diff_tables = {}
        if order >= 1:
            eye = np.eye(dim, dtype=int)
            self.grad_indices = np.array(
                [self.index[tuple(eye[i])] for i in range(dim)]
            )
        else:
            self.grad_indices = None
        # multinomial factor per monomial: m! = prod(m_i!), used to turn
        # Taylor coefficients into partial derivatives.
        self.factorials = np.array(
            [float(math.prod(math.factorial(e) for e in m)) for m in self.monomials]
        )

    @classmethod
    def get(cls, dim, order):
        key = (dim, order)
        sp = cls._cache.get(key)
        if sp is None:
            sp = cls._cache[key] = cls(dim, order)
        return sp

    @property
    def mul_table(self):
        """(I, J, starts): out[k] = sum over segment of a[I]*b[J].

        Triples (i, j, k) with monomial(i) + monomial(j) = monomial(k) are
        sorted by k; ``starts`` delimits the segment of each k for
        ``np.add.reduceat``.
        """
        if self._mul_table is None:
            triples = []
            for i, mi in enumerate(self.monomials):
                for j, mj in enumerate(self.monomials):
                    if sum(mi) + sum(mj) <= self.order:
                        mk = tuple(a + b for a, b in zip(mi, mj))
                        triples.append((self.index[mk], i, j))
            triples.sort()
            ks = np.array([t[0] for t in triples])
            I = np.array([t[1] for t in triples])
            J = np.array([t[2] for t in triples])
            # every output monomial k receives at least the (0, k) pair
            starts = np.searchsorted(ks, np.arange(self.ncoeff))
            self._mul_table = (I, J, starts)
        return self._mul_table

    def diff_table(self, var):
        """(src, scale): coefficients of d/dx_var live one degree higher."""
        if var not in self._diff_tables:
            lower = JetSpace.get(self.dim, self.order - 1) if self.order else None
            if lower is None:
                raise JetOrderError("cannot differentiate an order-0 jet")
            src = np.empty(lower.ncoeff, dtype=np.intp)
            scale = np.empty(lower.ncoeff)
            for t, m in enumerate(lower.monomials):
                up = list(m)
                up[var] += 1
                src[t] = self.index[tuple(up)]
                scale[t] = up[var]
            self._diff_tables[var] = (src, scale)
        return self._diff_tables[var]


class Jet:
    """Truncated Taylor expansion of a scalar at one point or a batch.

    ``coeffs`` has shape ``(space.ncoeff, *batch)``.  Arithmetic between
    jets of different orders truncates to the smaller order.
    """

    __slots__ = ("space", "coeffs")

    # make ndarray * Jet defer to Jet.__rmul__ instead of broadcasting
    __array_ufunc__ = None

    def __init__(self, space, coeffs):
        self.space = space
        self.coeffs = coeffs

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(space, value, batch_shape=()):
        coeffs = np.zeros((space.ncoeff,) + tuple(batch_shape))
        coeffs[0] = value
        return Jet(space, coeffs)

    @staticmethod
    def variable(space, var, value):
        """Seed the coordinate x_var: value at degree 0, coefficient 1 at e_var."""
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros((space.ncoeff,) + value.shape)
        coeffs[0] = value
        if space.order >= 1:
            e = tuple(1 if i == var else 0 for i in range(space.dim))
            coeffs[space.index[e]] = 1.0
        return Jet(space, coeffs)

    # -- inspection --------------------------------------------------------

    @property
    def value(self):
        return self.coeffs[0]

    @property
    def order(self):
        return self.space.order

    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]

    def partial(self, multi):
        """Partial derivative for an exponent tuple, as a plain array."""
        if len(multi) != self.space.dim:
            raise ValueError("exponent tuple has wrong length")
        if sum(multi) > self.space.order:
            raise JetOrderError(
                f"partial of order {sum(multi)} requested from an order-"
                f"{self.space.order} jet"
            )
        i = self.space.index[tuple(multi)]
        return self.coeffs[i] * self.space.factorials[i]

    def gradient(self):
        """First partials in coordinate order, shape (dim, *batch)."""
        if self.space.order < 1:
            raise JetOrderError("gradient needs order >= 1")
        return self.coeffs[self.space.grad_indices].copy()

    def truncated(self, order):
        if order > self.space.order:
            raise JetOrderError(
                f"cannot extend an order-{self.space.order} jet to {order}"
            )
        if order == self.space.order:
            return self
        target = JetSpace.get(self.space.dim, order)
        return Jet(target, self.coeffs[: target.ncoeff])

    def diff(self, var):
        """d/dx_var as a jet one order lower."""
        src, scale = self.space.diff_table(var)
        lower = JetSpace.get(self.space.dim, self.space.order - 1)
        shape = (1,) * (self.coeffs.ndim - 1)
        return Jet(lower, self.coeffs[src] * scale.reshape(scale.shape + shape))

    # -- ring operations ---------------------------------------------------

    def _align(self, other):
        if other.space.dim != self.space.dim:
            raise ValueError("jets live over different variable sets")
        k = min(self.space.order, other.space.order)
        return self.truncated(k), other.truncated(k)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.space, a.coeffs + b.coeffs)
        out = self.coeffs.copy()
        out[0] = out[0] + other
        return Jet(self.space, out)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.space, a.coeffs - b.coeffs)
        out = self.coeffs.copy()
        out[0] = out[0] - other
        return Jet(self.space, out)

    def __rsub__(self, other):
        out = -self.coeffs
        out[0] = out[0] + other
        return Jet(self.space, out)

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            I, J, starts = a.space.mul_table
            prod = a.coeffs[I] * b.coeffs[J]
            return Jet(a.space, np.add.reduceat(prod, starts, axis=0))
        return Jet(self.space, self.coeffs * other)

    __rmul__ = __mul__

    def reciprocal(self):
        v = np.asarray(self.value)
        if np.any(v == 0.0):
            raise JetDomainError("divide", "division by zero")
        return self.compose_derivs(
            [((-1.0) ** m * math.factorial(m)) * v ** (-(m + 1))
             for m in range(self.space.order + 1)]
        )

    def __truediv__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return a * b.reciprocal()
        return Jet(self.space, self.coeffs / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            raise TypeError("jet exponents are not supported")
        if float(p) == int(p):
            n = int(p)
            if n >= 0:
                return self._int_pow(n)
            return self.reciprocal()._int_pow(-n)
        v = np.asarray(self.value)
        if np.any(v <= 0.0):
            raise JetDomainError(
                "pow", f"fractional power {p} of a non-positive value"
            )
        derivs, fac = [], 1.0
        for m in range(self.space.order + 1):
            derivs.append(fac * v ** (p - m))
            fac *= p - m
        return self.compose_derivs(derivs)

    def _int_pow(self, n):
        if n == 0:
            return Jet.constant(self.space, 1.0, self.batch_shape)
        out, base = None, self
        while n:
            if n & 1:
                out = base if out is None else out * base
            n >>= 1
            if n:
                base = base * base
        return out

    # -- composition with univariate analytic primitives --------------------

    def compose_derivs(self, derivs):
        """sum_m derivs[m]/m! * (self - value)^m, truncated (Horner form).

        ``derivs[m]`` must be the m-th derivative of the outer function at
        ``self.value`` (an array over the batch).
        """
        K = self.space.order
        delta = Jet(self.space, self.coeffs.copy())
        delta.coeffs[0] = np.zeros_like(delta.coeffs[0])
        acc = Jet.constant(self.space, 0.0, self.batch_shape)
        acc.coeffs[0] = acc.coeffs[0] + derivs[K] / math.factorial(K)
        for m in range(K - 1, -1, -1):
            acc = acc * delta
            acc.coeffs[0] = acc.coeffs[0] + derivs[m] / math.factorial(m)
        return acc


# -- primitive function table ------------------------------------------------


def _cycle_derivs(v, order, fns):
    return [fns[m % len(fns)](v) for m in range(order + 1)]


def sin(u):
    v = np.asarray(u.value)
    return u.compose_derivs(
        _cycle_derivs(v, u.order, [np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)])
    )


def cos(u):
    v = np.asarray(u.value)
    return u.compose_derivs(
        _cycle_derivs(v, u.order, [np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin])
    )


def sinh(u):
    v = np.asarray(u.value)
    return u.compose_derivs(_cycle_derivs(v, u.order, [np.sinh, np.cosh]))


def cosh(u):
    v = np.asarray(u.value)
    return u.compose_derivs(_cycle_derivs(v, u.order, [np.cosh, np.sinh]))


def exp(u):
    e = np.exp(np.asarray(u.value))
    return u.compose_derivs([e] * (u.order + 1))


def log(u):
    v = np.asarray(u.value)
    if np.any(v <= 0.0):
        raise JetDomainError("log", "log of a non-positive value")
    derivs = [np.log(v)]
    for m in range(1, u.order + 1):
        derivs.append(((-1.0) ** (m - 1) * math.factorial(m - 1)) * v ** (-m))
    return u.compose_derivs(derivs)


def sqrt(u):
    v = np.asarray(u.value)
    if np.any(v <= 0.0):
        raise JetDomainError("sqrt", "sqrt of a non-positive value")
    derivs, fac = [np.sqrt(v)], 0.5
    for m in range(1, u.order + 1):
        derivs.append(fac * v ** (0.5 - m))
        fac *= 0.5 - m
    return u.compose_derivs(derivs)


def _tan_poly_derivs(order):
    """Derivatives of tan as polynomials in t = tan(x): p' means dp/dt*(1+t^2)."""
    polys = [[0.0, 1.0]]  # tan itself
    for _ in range(order):
        p = polys[-1]
        dp = [k * c for k, c in enumerate(p)][1:] or [0.0]
        # multiply dp by (1 + t^2)
        out = [0.0] * (len(dp) + 2)
        for k, c in enumerate(dp):
            out[k] += c
            out[k + 2] += c
        polys.append(out)
    return polys


def tan(u):
    v = np.asarray(u.value)
    t = np.tan(v)
    derivs = [sum(c * t**k for k, c in enumerate(p)) for p in _tan_poly_derivs(u.order)]
    return u.compose_derivs(derivs)


def _atan_derivs(v, order):
    """atan^(m)(v) = q_m(v) / (1+v^2)^m with q_1 = 1 and a polynomial recurrence."""
    derivs = [np.arctan(v)]
    if order == 0:
        return derivs
    w = 1.0 + v * v
    q = [1.0]
    for m in range(1, order + 1):
        qv = sum(c * v**k for k, c in enumerate(q))
        derivs.append(qv * w ** (-float(m)))
        # q_{m+1} = q_m'(x)*(1+x^2) - 2 m x q_m
        dq = [k * c for k, c in enumerate(q)][1:] or [0.0]
        nxt = [0.0] * (max(len(dq) + 2, len(q) + 1))
        for k, c in enumerate(dq):
            nxt[k] += c
            nxt[k + 2] += c
        for k, c in enumerate(q):
            nxt[k + 1] -= 2.0 * m * c
        q = nxt
    return derivs


def atan(u):
    v = np.asarray(u.value)
    return u.compose_derivs(_atan_derivs(v, u.order))


def atan2(uy, ux):
    """Angle of (ux, uy); smooth wherever ux^2 + uy^2 > 0.

    Uses atan2(Y, X) = atan2(y0, x0) + atan((x0 Y - y0 X) / (x0 X + y0 Y)),
    whose right-hand argument is an atan in its principal branch.
    """
    if not isinstance(uy, Jet):
        uy = Jet.constant(ux.space, uy, ux.batch_shape)
    if not isinstance(ux, Jet):
        ux = Jet.constant(uy.space, ux, uy.batch_shape)
    x0 = np.asarray(ux.value)
    y0 = np.asarray(uy.value)
    if np.any(x0 * x0 + y0 * y0 == 0.0):
        raise JetDomainError("atan2", "atan2 at the origin")
    num = x0 * uy - y0 * ux
    den = x0 * ux + y0 * uy
    return atan(num / den) + np.arctan2(y0, x0)


def absval(u):
    v = np.asarray(u.value)
    if np.any(v == 0.0):
        raise JetDomainError("abs", "abs is not differentiable at 0")
    return u * np.sign(v)


PRIMITIVES = {
    "sin": (sin, 1),
    "cos": (cos, 1),
    "tan": (tan, 1),
    "atan": (atan, 1),
    "atan2": (atan2, 2),
    "exp": (exp, 1),
    "log": (log, 1),
    "sqrt": (sqrt, 1),
    "sinh": (sinh, 1),
    "cosh": (cosh, 1),
    "abs": (absval, 1),
}


def constant_jet(dim, order, value, batch_shape=()):
    return Jet.constant(JetSpace.get(dim, order), value, batch_shape)


def variable_jets(dim, order, point):
    """Seed all chart coordinates at ``point`` (shape (dim, *batch))."""
    point = np.asarray(point, dtype=float)
    if point.shape[0] != dim:
        raise ValueError(f"expected {dim} coordinates, got {point.shape[0]}")
    space = JetSpace.get(dim, order)
    return [Jet.variable(space, i, point[i]) for i in range(dim)]
