from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import elements
from weylsos.scalar import SQRT2, Scalar
from weylsos.weyl import (
    LADDER1,
    PM1,
    CommutativePolynomial,
    Monomial,
    PresentationMismatch,
    WeylElement,
    X,
    Y,
    ZeroElement,
    a,
    a_star,
    from_ladder,
    leading_symbol,
    multidegree,
    number_operator,
    parse_element,
    symbol_positivity_sample,
    to_ladder,
)

N = number_operator()
ONE = WeylElement.constant(1)


def mono(a_, b_, c=1, pres=PM1):
    return WeylElement.monomial((a_,), (b_,), c, pres)


# -- independent oracle: X^a Y^b acts as x^a d^b/dx^b --------------------------

x = sp.Symbol("x")
f = sp.Function("f")(x)
R2 = sp.sqrt(2)


def sym_scalar(s: Scalar):
    q = lambda v: sp.Rational(v.numerator, v.denominator)  # noqa: E731
    return q(s.a) + q(s.b) * sp.I + q(s.c) * R2 + q(s.d) * sp.I * R2


def act(u: WeylElement, g):
    """Apply u to the expression g as a differential operator."""
    out = 0
    for m, c in u.terms.items():
        al, be = m.alpha[0], m.beta[0]
        if u.presentation == PM1:
            h = x**al * sp.diff(g, x, be)
        else:
            # a* = (x - d)/sqrt2 applied al times after a = (x + d)/sqrt2 applied be times
            h = g
            for _ in range(be):
                h = (x * h + sp.diff(h, x)) / R2
            for _ in range(al):
                h = (x * h - sp.diff(h, x)) / R2
        out += sym_scalar(c) * h
    return out


def same(e1, e2) -> bool:
    return sp.simplify(sp.expand(e1 - e2)) == 0


# -- examples ----------------------------------------------------------------


def test_commutation_relation():
    assert Y() * X() == X() * Y() + 1


def test_normal_ordering_y2x2():
    assert Y() ** 2 * X() ** 2 == mono(2, 2) + mono(1, 1, 4) + 2


def test_number_operator_from_ladder_factors():
    r = SQRT2.inv()
    assert (X() - Y()).scale(r) * (X() + Y()).scale(r) == N
    assert N == (X() * X() - Y() * Y() - 1) / 2


def test_star_examples():
    assert X().star() == X()
    assert (X() * Y()).star() == -(X() * Y()) - 1
    c = (N * 2 + 1) ** 2
    assert c.star() == c


def test_presentation_mismatch():
    with pytest.raises(PresentationMismatch):
        X() * a()


def test_leading_symbol_examples():
    assert leading_symbol(N) == CommutativePolynomial(
        1, {Monomial((2,), (0,)): Scalar(Fraction(1, 2)), Monomial((0,), (2,)): Scalar(Fraction(-1, 2))}
    )
    assert leading_symbol(X()) == CommutativePolynomial(1, {Monomial((1,), (0,)): Scalar(1)})
    c = parse_element("-Y^2 + X^2 + X^4")
    assert leading_symbol(c) == CommutativePolynomial(1, {Monomial((4,), (0,)): Scalar(1)})
    with pytest.raises(ZeroElement):
        leading_symbol(WeylElement.zero())


def test_symbol_positivity_examples():
    assert symbol_positivity_sample(N, 500).passed
    assert symbol_positivity_sample((N * 2 + 1) ** 2, 500).passed
    res = symbol_positivity_sample(X() * X(), 500)
    assert not res.passed
    assert res.point == (0.0, 1.0)


def test_multidegree_examples():
    md = multidegree(X())
    assert (md.d1, md.d2) == (0, 1)
    assert md.f_top == [Scalar(1)]
    assert md.g_top == [Scalar(0), Scalar(1)]
    md = multidegree(-Y() * Y() + X() * X())
    assert (md.d1, md.d2) == (2, 2)
    assert md.f_top == [Scalar(1)] and md.g_top == [Scalar(1)]
    # p^2 q^2 + lower has a nonzero corner coefficient
    md = multidegree(-(Y() ** 2) * X() ** 2 + X())
    assert (md.d1, md.d2) == (2, 2) and md.corner == Scalar(1)
    with pytest.raises(ZeroElement):
        multidegree(WeylElement.zero())


def test_ladder_conversions():
    assert to_ladder(N) == a_star() * a()
    assert to_ladder(X() * X() - Y() * Y()) == a_star() * a() * 2 + WeylElement.constant(1, LADDER1)
    c = Y() ** 4 + X() ** 4
    assert from_ladder(to_ladder(c)) == c


def test_ladder_relation():
    assert a() * a_star() - a_star() * a() == WeylElement.constant(1, LADDER1)
    assert a().star() == a_star()


def test_parse_element():
    assert parse_element("XY + 2 Y^2 X") == X() * Y() + Y() * Y() * X() * 2
    assert parse_element("(a + a*)/r2", LADDER1) == (a() + a_star()).scale(SQRT2.inv())


def test_degree():
    assert (X() ** 3 * Y() + 1).degree == 4
    assert WeylElement.constant(5).degree == 0


# -- oracle checks -------------------------------------------------------------


def test_oracle_examples():
    assert same(act(Y() * X(), f), act(X() * Y() + 1, f))
    assert same(act(N, f), (x**2 * f - sp.diff(f, x, 2) - f) / 2)
    assert same(act(a_star() * a(), f), act(N, f))


@settings(max_examples=60, deadline=None)
@given(elements(), elements())
def test_product_matches_operator_composition(u, v):
    assert same(act(u * v, f), act(u, act(v, f)))


@settings(max_examples=40, deadline=None)
@given(elements(presentation=LADDER1), elements(presentation=LADDER1))
def test_ladder_product_matches_operator_composition(u, v):
    assert same(act(u * v, f), act(u, act(v, f)))


@settings(max_examples=40, deadline=None)
@given(elements(presentation=LADDER1))
def test_ladder_conversion_preserves_operator(u):
    assert same(act(from_ladder(u), f), act(u, f))


# -- algebra laws ----------------------------------------------------------------

LAWS = settings(max_examples=500, deadline=None)


@LAWS
@given(elements(), elements(), elements())
def test_associativity(u, v, w):
    assert (u * v) * w == u * (v * w)


@LAWS
@given(elements(), elements())
def test_star_is_antihomomorphism(u, v):
    assert (u * v).star() == v.star() * u.star()
    assert (u + v).star() == u.star() + v.star()
    assert u.star().star() == u


@LAWS
@given(elements(), elements())
def test_degree_additive(u, v):
    assert (u * v).degree == u.degree + v.degree


@LAWS
@given(elements(), elements())
def test_symbol_multiplicative(u, v):
    assert leading_symbol(u * v) == leading_symbol(u) * leading_symbol(v)


@settings(max_examples=100, deadline=None)
@given(elements(max_deg=3))
def test_ladder_roundtrip(u):
    assert from_ladder(to_ladder(u)) == u


@settings(max_examples=100, deadline=None)
@given(elements(), st.integers(0, 3))
def test_power_matches_repeated_product(u, n):
    p = WeylElement.constant(1)
    for _ in range(n):
        p = p * u
    assert u**n == p
