import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from folia import jets
from folia.errors import JetDomainError, JetOrderError
from folia.jets import Jet, JetSpace


class Poly:
    """Exact multivariate polynomial (dict of exponent tuple -> coeff);
    the independent oracle for polynomial jet arithmetic."""

    def __init__(self, dim, terms=None):
        self.dim = dim
        self.terms = dict(terms or {})

    @staticmethod
    def var(dim, i):
        e = tuple(1 if j == i else 0 for j in range(dim))
        return Poly(dim, {e: 1.0})

    @staticmethod
    def const(dim, c):
        return Poly(dim, {(0,) * dim: c})

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return Poly(self.dim, out)

    def __mul__(self, other):
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Poly(self.dim, out)

    def partial(self, multi, point):
        total = 0.0
        for e, c in self.terms.items():
            coef = c
            for v in range(self.dim):
                if e[v] < multi[v]:
                    coef = 0.0
                    break
                coef *= math.perm(e[v], multi[v]) * point[v] ** (e[v] - multi[v])
            total += coef
        return total


def random_poly(rng, dim, degree):
    p = Poly.const(dim, rng.normal())
    for _ in range(6):
        term = Poly.const(dim, rng.normal())
        for _ in range(rng.integers(0, degree + 1)):
            term = term * Poly.var(dim, rng.integers(0, dim))
        # drop terms exceeding the degree budget
        if all(sum(e) <= degree for e in term.terms):
            p = p + term
    return p


def eval_poly_jet(p, point, order):
    env = jets.variable_jets(p.dim, order, np.asarray(point))
    acc = jets.constant_jet(p.dim, order, 0.0)
    for e, c in p.terms.items():
        term = jets.constant_jet(p.dim, order, c)
        for v, k in enumerate(e):
            for _ in range(k):
                term = term * env[v]
        acc = acc + term
    return acc


def test_product_example():
    x, y = jets.variable_jets(2, 2, np.array([2.0, 3.0]))
    p = x * y
    assert p.value == 6.0
    assert p.partial((1, 0)) == 3.0
    assert p.partial((0, 1)) == 2.0
    assert p.partial((1, 1)) == 1.0


def test_pythagorean_identity():
    x, = jets.variable_jets(1, 3, np.array([0.7]))
    one = jets.sin(x) ** 2 + jets.cos(x) ** 2
    assert abs(one.value - 1.0) < 1e-14
    for k in range(1, 4):
        assert abs(one.partial((k,))) < 1e-14


def test_arctan_slope_against_fd_sweep():
    # d/dr arctan(f'(r)) for f = r^3 at r = 0.5, via central differences
    r, = jets.variable_jets(1, 2, np.array([0.5]))
    mu = jets.atan(3.0 * r ** 2)
    exact = mu.partial((1,))

    def f(t):
        return math.atan(3 * t * t)

    for h in (1e-3, 1e-4, 1e-5):
        fd = (f(0.5 + h) - f(0.5 - h)) / (2 * h)
        assert abs(exact - fd) <= 1e-5 * max(1.0, abs(fd))
    assert abs(exact - 3.0 / (1.0 + 0.5625)) < 1e-13


def test_polynomial_partials_exact():
    rng = np.random.default_rng(42)
    for dim, order in [(1, 4), (2, 3), (3, 4)]:
        for _ in range(10):
            p = random_poly(rng, dim, order)
            point = rng.uniform(-1.5, 1.5, dim)
            j = eval_poly_jet(p, point, order)
            space = JetSpace.get(dim, order)
            for multi in space.monomials:
                want = p.partial(multi, point)
                got = j.partial(multi)
                assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_analytic_partials_match_richardson_fd():
    rng = np.random.default_rng(7)
    pts = rng.uniform(0.4, 1.1, size=(2, 5))
    x, y = jets.variable_jets(2, 3, pts)
    f = jets.exp(jets.sin(x) * y) / (1.0 + x * y) + jets.atan(x / y)

    def fn(a, b):
        return np.exp(np.sin(a) * b) / (1 + a * b) + np.arctan(a / b)

    h = 1e-2
    for multi, d in [((1, 0), 0), ((0, 1), 1), ((2, 0), 0), ((2, 1), None)]:
        got = f.partial(multi)
        if multi == (1, 0):
            fd = lambda hh: (fn(pts[0] + hh, pts[1]) - fn(pts[0] - hh, pts[1])) / (2 * hh)
        elif multi == (0, 1):
            fd = lambda hh: (fn(pts[0], pts[1] + hh) - fn(pts[0], pts[1] - hh)) / (2 * hh)
        elif multi == (2, 0):
            fd = lambda hh: (fn(pts[0] + hh, pts[1]) - 2 * fn(pts[0], pts[1]) + fn(pts[0] - hh, pts[1])) / hh**2
        else:
            def fd(hh):
                d2 = lambda b: (fn(pts[0] + hh, b) - 2 * fn(pts[0], b) + fn(pts[0] - hh, b)) / hh**2
                return (d2(pts[1] + hh) - d2(pts[1] - hh)) / (2 * hh)
        rich = (4 * fd(h / 2) - fd(h)) / 3
        assert np.max(np.abs(got - rich) / np.maximum(np.abs(rich), 1e-3)) < 1e-6


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2), st.data())
def test_ring_axioms(seed_kind, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    space = JetSpace.get(2, 3)
    a = Jet(space, rng.normal(size=space.ncoeff))
    b = Jet(space, rng.normal(size=space.ncoeff))
    c = Jet(space, rng.normal(size=space.ncoeff))
    comm = (a * b).coeffs - (b * a).coeffs
    assoc = ((a * b) * c).coeffs - (a * (b * c)).coeffs
    dist = (a * (b + c)).coeffs - ((a * b).coeffs + (a * c).coeffs)
    for arr in (comm, assoc, dist):
        assert np.max(np.abs(arr)) <= 1e-12 * max(1.0, np.max(np.abs(a.coeffs)) ** 3)


def test_division_and_reciprocal():
    rng = np.random.default_rng(3)
    x, y = jets.variable_jets(2, 4, rng.uniform(0.5, 1.5, (2, 6)))
    f = (1.0 + x * y) / (2.0 + jets.sin(x))
    g = f * (2.0 + jets.sin(x))
    assert np.max(np.abs(g.coeffs - (1.0 + x * y).coeffs)) < 1e-13


def test_diff_shifts_taylor_coefficients():
    r, = jets.variable_jets(1, 4, np.array([0.3]))
    f = jets.exp(2.0 * r)
    df = f.diff(0)
    assert np.allclose(df.value, 2 * math.exp(0.6))
    assert np.allclose(df.partial((2,)), 8 * math.exp(0.6))


def test_atan2_quadrants_and_partials():
    for (xx, yy) in [(0.8, -0.4), (-0.7, 0.2), (-0.5, -0.9)]:
        x, y = jets.variable_jets(2, 2, np.array([xx, yy]))
        a = jets.atan2(y, x)
        assert abs(a.value - math.atan2(yy, xx)) < 1e-14
        r2 = xx * xx + yy * yy
        assert abs(a.partial((1, 0)) - (-yy / r2)) < 1e-13
        assert abs(a.partial((0, 1)) - (xx / r2)) < 1e-13


def test_domain_errors():
    x, = jets.variable_jets(1, 2, np.array([-1.0]))
    with pytest.raises(JetDomainError):
        jets.log(x)
    with pytest.raises(JetDomainError):
        jets.sqrt(x)
    zero = jets.constant_jet(1, 2, 0.0)
    with pytest.raises(JetDomainError):
        zero.reciprocal()
    with pytest.raises(JetDomainError):
        jets.absval(zero)
    with pytest.raises(JetDomainError):
        x ** 0.5


def test_integer_powers_of_negative_base():
    x, = jets.variable_jets(1, 3, np.array([-0.8]))
    cube = x ** 3
    assert abs(cube.value - (-0.512)) < 1e-14
    assert abs(cube.partial((1,)) - 3 * 0.64) < 1e-13
    inv3 = x ** -3
    assert abs(inv3.value - (-0.8) ** -3) < 1e-12


def test_order_errors():
    x, = jets.variable_jets(1, 2, np.array([0.5]))
    with pytest.raises(JetOrderError):
        x.partial((3,))
    j0 = x.truncated(0)
    with pytest.raises(JetOrderError):
        j0.diff(0)
    with pytest.raises(JetOrderError):
        j0.truncated(1)
