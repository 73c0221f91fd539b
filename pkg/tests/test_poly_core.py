import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genjulia.exceptions import MaterializationCapError, PreconditionError
from genjulia.poly_core import (
    EXTENDED,
    FLOAT64,
    RATIONAL,
    Polynomial,
    compose,
    derivative,
    evaluate,
    evaluate_many,
    parse_scalar,
    power_sums,
)


def R(*cs):
    return Polynomial(tuple(Fraction(c) for c in cs), RATIONAL)


# -- evaluate -------------------------------------------------------------------

def test_evaluate_simple():
    assert evaluate(R(-1, 0, 1), Fraction(2)) == 3


def test_evaluate_chebyshev_identity():
    p = Polynomial((-1, 0, 2))
    v = evaluate(p, math.cos(math.pi / 8))
    assert abs(v - math.cos(math.pi / 4)) < 1e-15


def test_evaluate_at_zero_returns_constant():
    p = R("3/7", 2, 5)
    assert evaluate(p, 0) == Fraction(3, 7)
    q = Polynomial((0.1 + 2j, 3, 1))
    assert evaluate(q, 0) == 0.1 + 2j


def test_evaluate_overflow_is_infinite_not_error():
    p = Polynomial((0, 0, 0, 0, 0, 0, 0, 0, 1))
    v = evaluate(p, 1e300)
    assert math.isinf(abs(v))


def test_evaluate_extended_precision():
    p = Polynomial(("1/3", 0, 1), EXTENDED, 200)
    v = evaluate(p, Fraction(1, 2))
    assert abs(complex(v) - (1 / 3 + 1 / 4)) < 1e-15
    assert v.context.prec == 200


def test_evaluate_many_matches_scalar():
    p = Polynomial((1, -2, 0.5, 3))
    zs = np.array([0.3, -1.2 + 0.5j, 2j])
    assert np.allclose(evaluate_many(p, zs), [evaluate(p, z) for z in zs])


# -- construction ---------------------------------------------------------------

def test_trailing_zeros_dropped():
    p = R(1, 2, 0, 0)
    assert p.degree == 1


def test_zero_polynomial_rejected():
    with pytest.raises(PreconditionError):
        R(0, 0)


def test_parse_scalar_rational_strings():
    assert parse_scalar("3/8", RATIONAL) == Fraction(3, 8)
    assert parse_scalar("0.2", RATIONAL) == Fraction(1, 5)
    assert parse_scalar("1+2j") == 1 + 2j


# -- compose --------------------------------------------------------------------

def test_compose_examples():
    assert compose(R(1, 0, 1), R(0, 0, 1)).coeffs == R(1, 0, 0, 0, 1).coeffs
    t2 = R(-1, 0, 2)
    assert compose(t2, t2).coeffs == R(1, 0, -8, 0, 8).coeffs
    assert compose(R(0, 0, 1), R(0, 1)).coeffs == R(0, 0, 1).coeffs


def test_compose_degree_and_leading():
    outer, inner = R(1, 2, 3), R(5, -1, 0, 2)
    c = compose(outer, inner)
    assert c.degree == 6
    assert c.leading == 3 * 2 ** 2


def test_compose_cap():
    p = R(0, 0, 1)
    with pytest.raises(MaterializationCapError):
        compose(p, p, cap=3)


def test_compose_float_overflow_flag():
    p = Polynomial((0, 0, 1e200))
    c = compose(p, p)
    assert c.overflow
    assert c.log_abs_leading == pytest.approx(3 * math.log(1e200))


# -- derivative -----------------------------------------------------------------

def test_derivative_examples():
    assert derivative(R("1/8", 0, -1, 0, 1)).coeffs == R(0, -2, 0, 4).coeffs
    assert derivative(R(-1, 0, 1)).coeffs == R(0, 2).coeffs
    assert evaluate(derivative(R(1, 0, -8, 0, 8)), Fraction(0)) == 0


# -- power sums -----------------------------------------------------------------

def test_power_sums_examples():
    assert power_sums(R(2, -3, 1), 1)[1] == 3
    s = power_sums(R(2, 0, -4, 0, 1), 3)
    assert (s[1], s[2], s[3]) == (0, 8, 0)
    assert power_sums(R(5, -3, 1), 1)[1] == 3


def test_power_sums_range():
    with pytest.raises(PreconditionError):
        power_sums(R(2, -3, 1), 2)
    with pytest.raises(PreconditionError):
        power_sums(R(2, -3, 1), 0)
    t = power_sums(R(1, 2, 3, 4), 2)
    assert t.valid_up_to == 2 and t.source_degree == 3
    with pytest.raises(IndexError):
        t[3]


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def rat_polys(draw, min_deg=2, max_deg=8):
    d = draw(st.integers(min_deg, max_deg))
    cs = draw(st.lists(rationals, min_size=d, max_size=d))
    lead = draw(rationals.filter(lambda x: x != 0))
    return R(*cs, lead)


@settings(max_examples=60, deadline=None)
@given(rat_polys(), rationals)
def test_power_sums_translation_invariant(p, c):
    K = p.degree - 1
    assert power_sums(p, K).values == power_sums(p + c, K).values


@settings(max_examples=60, deadline=None)
@given(rat_polys())
def test_power_sums_match_roots(p):
    K = p.degree - 1
    roots = np.roots([float(c) for c in reversed(p.coeffs)])
    s = power_sums(p, K)
    for k in range(1, K + 1):
        brute = np.sum(roots ** k)
        assert abs(complex(s[k]) - brute) <= 1e-8 * max(1.0, np.sum(np.abs(roots) ** k))


@settings(max_examples=40, deadline=None)
@given(rat_polys(1, 3), rat_polys(1, 3), rat_polys(1, 3))
def test_compose_associative(f, g, h):
    assert compose(f, compose(g, h)).coeffs == compose(compose(f, g), h).coeffs


@settings(max_examples=60, deadline=None)
@given(rat_polys(1, 4), rat_polys(1, 4),
       st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False))
def test_compose_evaluates_as_nesting(f, g, z):
    lhs = complex(evaluate(compose(f, g), z))
    rhs = complex(evaluate(f, evaluate(g, z)))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_mode_conversion_round_trip():
    p = R("1/3", "-2/5", 1)
    e = p.to_mode(EXTENDED, 100)
    assert e.mode == EXTENDED and e.bits == 100
    f = p.to_mode(FLOAT64)
    assert f.coeffs[0] == pytest.approx(1 / 3)
    assert f.to_mode(RATIONAL).coeffs[2] == 1
