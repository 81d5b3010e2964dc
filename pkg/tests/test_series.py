from __future__ import annotations

from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import compose_oracle, delta_box, revert_oracle, to_sympy

from vocalc.errors import LimitUndetermined
from vocalc.series import (
    ExponentWindow,
    ParameterRing,
    TruncatedSeries,
    compare,
    compose,
    compositional_inverse,
    delta3_sides,
    delta_laws_check,
    delta_series,
    iota_expand,
    limit_x1_to_x2,
    multiply,
    reciprocal,
)

R = ParameterRing(("a", "b"), ("u",), 4)
a, b, u = R.param("a"), R.param("b"), R.param("u")
Q = ParameterRing((), (), 1)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def coefficients():
    mono = st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(-2, 2))
    return st.dictionaries(mono, rationals, max_size=4).map(lambda d: R.coerce(0) + sum((R.const(v) * a ** e[0] * b ** e[1] * u ** e[2] for e, v in d.items()), R.zero()))


def uni(terms, ring=Q):
    return TruncatedSeries.univariate(ring, "x", terms)


def coeff_dict(s):
    return {e[0]: c.scalar() for e, c in s.coeffs.items() if c}


# -- the coefficient ring


def test_nilpotent_truncation():
    assert (a * b) ** 2 == a**2 * b**2
    assert (a**3 * b**2).is_zero()  # degree 5 > 4


def test_inverse_of_unit_plus_nilpotent():
    x = u + a
    assert x * x.inverse() == R.one()
    assert to_sympy(x.inverse()) == sp.expand(sp.series(1 / (sp.Symbol("u") + sp.Symbol("a")), sp.Symbol("a"), 0, 5).removeO())


def test_log_exp_roundtrip():
    x = a + a * b - b**2
    assert (1 + x).log().exp() == 1 + x
    assert x.exp().log() == x


def test_coefficient_extraction():
    x = 3 * a**2 * b - Fraction(1, 2) * u**-1
    assert x.coefficient(a=2, b=1) == 3
    assert x.coefficient(u=-1) == Fraction(-1, 2)


@settings(max_examples=60, deadline=None)
@given(coefficients(), coefficients(), coefficients())
def test_ring_axioms(x, y, z):
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x


@settings(max_examples=40, deadline=None)
@given(coefficients(), st.fractions(min_value=1, max_value=4, max_denominator=3))
def test_inverse_property(x, c):
    # c + (nilpotent part of x) is always invertible
    y = R.const(c) + x.degree_part(1) + x.degree_part(2)
    assert y * y.inverse() == R.one()


# -- series


def test_multiply_against_convolution():
    f, g = {-1: 2, 0: 1, 3: Fraction(1, 3)}, {1: -1, 2: 5}
    want = {}
    for i, p in f.items():
        for j, q in g.items():
            want[i + j] = want.get(i + j, 0) + Fraction(p) * q
    assert coeff_dict(multiply(uni(f), uni(g))) == {k: v for k, v in want.items() if v}


@pytest.mark.parametrize(
    "g,f",
    [
        ({2: 1, 3: -1}, {1: 1, 2: 1}),
        ({-1: 1, 2: 3}, {1: 2, 2: 1}),
        ({1: Fraction(1, 2), 4: 2}, {1: -1, 3: Fraction(2, 3)}),
    ],
)
def test_compose_matches_sympy(g, f):
    got = compose(uni(g), uni(f), 4)
    lo = min(got.coeffs)[0]
    want = compose_oracle(g, f, 4)
    assert {k: v for k, v in coeff_dict(got).items() if k <= 4} == {k: v for k, v in want.items() if k >= lo}


@pytest.mark.parametrize("f", [{1: 1, 2: 1}, {1: 2, 3: -1}, {1: Fraction(1, 2), 2: 3, 4: 1}])
def test_compositional_inverse_matches_undetermined_coefficients(f):
    got = compositional_inverse(uni(f), 6)
    assert coeff_dict(got) == revert_oracle(f, 6)
    assert coeff_dict(compose(uni(f), got, 6)) == {1: 1}


def test_catalan_reversion():
    # the inverse of x - x^2 has Catalan coefficients
    got = coeff_dict(compositional_inverse(uni({1: 1, 2: -1}), 7))
    assert got == {1: 1, 2: 1, 3: 2, 4: 5, 5: 14, 6: 42, 7: 132}


def test_reciprocal_geometric():
    s = reciprocal(uni({0: 1, 1: -1}), 6)
    assert coeff_dict(s) == dict.fromkeys(range(7), 1)
    assert s.window[0] == (None, 6)


def test_reciprocal_at_infinity():
    s = reciprocal(uni({1: 1, 0: -1}), -4, at="infinity")
    assert coeff_dict(s) == {-1: 1, -2: 1, -3: 1, -4: 1}


@settings(max_examples=40, deadline=None)
@given(st.lists(rationals, min_size=1, max_size=4), st.fractions(min_value=1, max_value=3, max_denominator=3))
def test_inverse_composes_to_identity(tail, lead):
    f = uni({1: lead, **{k + 2: c for k, c in enumerate(tail)}})
    h = compositional_inverse(f, 6)
    assert coeff_dict(compose(f, h, 6)) == {1: 1}
    assert coeff_dict(compose(h, f, 6)) == {1: 1}


def test_iota_negative_power():
    # (x1 - x2)^-2 in nonnegative powers of x2: sum (k+1) x1^{-2-k} x2^k
    s = iota_expand(Q, ("x1", "x2"), "x1", "x2", -2, sign=-1, window=((None, None), (0, 5)))
    assert {e: c.scalar() for e, c in s.coeffs.items()} == {(-2 - k, k): k + 1 for k in range(6)}


def test_iota_direction_changes_expansion():
    w = ((-4, 4), (-4, 4))
    s12 = iota_expand(Q, ("x1", "x2"), "x1", "x2", -1, sign=-1, window=w)
    s21 = iota_expand(Q, ("x1", "x2"), "x1", "x2", -1, sign=-1, direction="x1", window=w)
    diff = s12 - s21
    # the difference is x2^{-1} delta(x1/x2) on the window
    assert {e: c.scalar() for e, c in diff.coeffs.items() if c} == {(k, -1 - k): 1 for k in range(-4, 4)}


# -- delta functions


def test_delta_series_matches_binomial_oracle():
    r = 4
    s = delta_series(Q, ("x0", "x1", "x2"), ExponentWindow.box(r, 3), "x0", "x1", "x2", sign=-1)
    assert {e: c.scalar() for e, c in s.coeffs.items()} == delta_box(r, -1)


def test_delta3_both_sides_are_exact_slices():
    first, second, right = delta3_sides(Q, 3)
    assert first.window == right.window
    assert compare(first - second, right) is None


@pytest.mark.parametrize("radius", [8, 10, 12])
def test_delta_laws_interior_windows(radius):
    X = TruncatedSeries(Q, ("x1", "x2"), None, {(1, 1): 1, (-2, 3): Fraction(1, 2)})
    assert delta_laws_check(X, radius=radius).all_pass


@pytest.mark.parametrize("law,exps", [("delta1", (2, -2)), ("delta2", (-1, 0, 0)), ("delta3", (-3, 1, 1))])
def test_delta_mutation_gives_witness(law, exps):
    X = TruncatedSeries(Q, ("x1", "x2"), None, {(1, 1): 1})
    rep = delta_laws_check(X, radius=6, mutate=(law, exps))
    assert not getattr(rep, law)
    wit = rep.witnesses[law]
    assert wit["left"] != wit["right"]


def test_limit_needs_full_window():
    X = TruncatedSeries(Q, ("x1", "x2"), ((0, 3), (None, None)), {(1, 1): 1})
    with pytest.raises(LimitUndetermined):
        limit_x1_to_x2(X)
