from __future__ import annotations

from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import series_coeffs, sl2_oracle, to_sympy, truncate_total

from vocalc.series import ParameterRing, TruncatedSeries, compare, compose
from vocalc.virasoro import (
    LocalCoordinate,
    VirasoroElement,
    apply_exp_derivation,
    bch_factorize,
    bracket,
    compare_elements,
    coords_from_coordinate_map,
    map_from_coords,
    uea_multiply,
    verify_bch,
)

N = 8


def L(ring, k, coeff=1):
    return VirasoroElement.generator(ring, k, N, coeff)


Q = ParameterRing((), (), 1)


@pytest.mark.parametrize("m,n", [(2, -2), (3, -3), (1, -1), (2, 1), (-1, -2), (4, -4)])
def test_virasoro_relations(m, n):
    got = bracket(L(Q, m), L(Q, n))
    want = L(Q, m + n, m - n)
    if m + n == 0:
        want = want + VirasoroElement.central(Q, N, Fraction(m**3 - m, 12))
    assert compare_elements(got, want) is None


def test_pbw_reordering():
    # L(1) L(-1) = L(-1) L(1) + 2 L(0)
    got = uea_multiply(L(Q, 1), L(Q, -1))
    assert got.coefficient((-1, 1)) == 1
    assert got.coefficient((0,)) == 2


elements = st.lists(
    st.tuples(st.integers(-3, 3), st.fractions(min_value=-3, max_value=3, max_denominator=4)),
    min_size=1,
    max_size=3,
).map(lambda ts: sum((L(Q, k, c) for k, c in ts), VirasoroElement(Q, {}, N)))


@settings(max_examples=30, deadline=None)
@given(elements, elements, elements)
def test_jacobi_identity_in_enveloping_algebra(x, y, z):
    total = bracket(bracket(x, y), z) + bracket(bracket(y, z), x) + bracket(bracket(z, x), y)
    assert compare_elements(total, VirasoroElement(Q, {}, N), -N, N) is None


@settings(max_examples=20, deadline=None)
@given(elements, elements, elements)
def test_enveloping_product_associative(x, y, z):
    assert compare_elements(uea_multiply(uea_multiply(x, y), z), uea_multiply(x, uea_multiply(y, z)), -N, N) is None


# -- coordinate maps


def test_single_coefficient_flow_is_moebius():
    # exp(a x^2 d/dx) x = x / (1 - a x)
    R = ParameterRing(("a",), (), 5)
    a = R.param("a")
    f = map_from_coords(LocalCoordinate.make(R, 1, [a]), 6, "x")
    for k in range(1, 6):
        assert f.coeff(k) == a ** (k - 1)


def test_two_coefficient_flow_matches_ode():
    # exp(A1 x^2 d/dx + A2 x^3 d/dx) x solved as an ODE in sympy
    x = sp.Symbol("x")
    A1, A2 = sp.Rational(1, 2), sp.Rational(-1, 3)
    flow = x
    # Lie series sum_k V^k x / k! with V = (A1 x^2 + A2 x^3) d/dx
    term = x
    for k in range(1, 8):
        term = sp.expand((A1 * x**2 + A2 * x**3) * sp.diff(term, x) / k)
        flow += term
    want = series_coeffs(flow, 1, 6)
    got = map_from_coords(LocalCoordinate.make(Q, 1, [Fraction(1, 2), Fraction(-1, 3)]), 6, "x")
    assert {k: got.coeff(k).scalar() for k in range(1, 7) if got.coeff(k)} == want


def test_scaling_coordinate():
    f = map_from_coords(LocalCoordinate.make(Q, 3, []), 4, "x")
    assert f.coeff(1).scalar() == 3


@settings(max_examples=25, deadline=None)
@given(st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=3), min_size=1, max_size=3), st.fractions(min_value=1, max_value=3, max_denominator=2))
def test_coordinates_roundtrip(A, a0):
    c = LocalCoordinate.make(Q, a0, A)
    f = map_from_coords(c, 8, "x")
    back = coords_from_coordinate_map(f, order=len(A) + 2)
    assert back.a0 == c.a0
    assert [back.coeff(j) for j in range(1, len(A) + 1)] == [c.coeff(j) for j in range(1, len(A) + 1)]


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=3), min_size=1, max_size=3),
    st.dictionaries(st.integers(-3, 5), st.fractions(min_value=-3, max_value=3, max_denominator=4), min_size=1, max_size=3),
)
def test_exp_derivation_is_composition(A, terms):
    g = TruncatedSeries.univariate(Q, "x", terms)
    left = apply_exp_derivation([Q.coerce(x) for x in A], g, 8)
    right = compose(g, map_from_coords(LocalCoordinate.make(Q, 1, A), 8, "x"), 8)
    w = left.window.intersect(right.window)
    assert compare(left.restrict(w), right.restrict(w)) is None


# -- the BCH factorization


def test_sl2_matches_matrix_oracle():
    D = 6
    R = ParameterRing(("a", "b"), (), D)
    a, b = R.param("a"), R.param("b")
    fac = bch_factorize([a], [b], R.one(), R.one(), N, D)
    sa, sb = sp.symbols("a b")
    pm, p0, pp = sl2_oracle(sa, sb)
    assert to_sympy(fac.psi(-1)) == truncate_total(pm, ["a", "b"], D)
    assert to_sympy(fac.psi(1)) == truncate_total(pp, ["a", "b"], D)
    assert to_sympy(fac.psi0) == truncate_total(p0, ["a", "b"], D)
    assert fac.gamma.is_zero()
    assert all(fac.psi(k).is_zero() for k in (-3, -2, 2, 3))


def test_sl2_closed_forms():
    # frozen from the oracle: psi_-1 = b/(1-ab), psi_1 = a/(1-ab), psi_0 = -2 log(1-ab)
    R = ParameterRing(("a", "b"), (), 4)
    a, b = R.param("a"), R.param("b")
    fac = bch_factorize([a], [b], R.one(), R.one(), N, 4)
    assert fac.psi(-1) == b * (1 - a * b).inverse()
    assert fac.psi(1) == a * (1 - a * b).inverse()
    assert fac.psi0 == -2 * (1 - a * b).log()


def test_gamma_central_factor():
    R = ParameterRing(("a2", "b2"), (), 2)
    fac = bch_factorize([0, R.param("a2")], [0, R.param("b2")], R.one(), R.one(), N, 2)
    assert fac.gamma.coefficient(a2=1, b2=1) == Fraction(2**3 - 2, 12)


def test_gamma_depends_on_scalings_through_product():
    R = ParameterRing(("a2", "b2"), ("al", "be"), 2)
    fac = bch_factorize([0, R.param("a2")], [0, R.param("b2")], R.param("al"), R.param("be"), N, 2)
    assert fac.gamma_product_only
    assert fac.gamma.coefficient(a2=1, b2=1, al=-2, be=-2) == Fraction(1, 2)


@pytest.mark.parametrize("length", [1, 2, 3])
def test_bch_formal_inputs(length):
    names = [f"a{j}" for j in range(1, length + 1)] + [f"b{j}" for j in range(1, length + 1)]
    R = ParameterRing(tuple(names), ("al", "be"), 3)
    A = [R.param(f"a{j}") for j in range(1, length + 1)]
    B = [R.param(f"b{j}") for j in range(1, length + 1)]
    fac = bch_factorize(A, B, R.param("al"), R.param("be"), N, 3)
    assert verify_bch(fac, A, B, R.param("al"), R.param("be")) is None


@settings(max_examples=15, deadline=None)
@given(
    st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=3), min_size=1, max_size=3),
    st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=3), min_size=1, max_size=3),
)
def test_bch_rational_multiples(A, B):
    # a single nilpotent t scales every input
    R = ParameterRing(("t",), (), 3)
    t = R.param("t")
    Ar, Br = [t * x for x in A], [t * x for x in B]
    fac = bch_factorize(Ar, Br, R.one(), R.one(), N, 3)
    assert verify_bch(fac, Ar, Br, R.one(), R.one()) is None


def test_bch_detects_tampering():
    R = ParameterRing(("a2", "b2"), (), 2)
    A, B = [0, R.param("a2")], [0, R.param("b2")]
    fac = bch_factorize(A, B, R.one(), R.one(), N, 2)
    fac.gamma = R.zero()
    wit = verify_bch(fac, A, B, R.one(), R.one())
    assert wit is not None
    assert "d" in wit["word"]
