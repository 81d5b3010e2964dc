from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vocalc import moduli
from vocalc.errors import CoincidentPunctures, UnsupportedSewingShape
from vocalc.moduli import (
    ModuliElement,
    identity_element,
    operad_transform_I,
    permute,
    sew,
)
from vocalc.series import ParameterRing
from vocalc.suites import law_fixtures

N = 5
FX = law_fixtures()


def scaling(ring, a0, A=()):
    return ModuliElement.kstar(ring, (), [(), (a0, tuple(A))])


def test_scalings_multiply():
    R = ParameterRing((), ("u", "v"), 1)
    u, v = R.param("u"), R.param("v")
    got = sew(scaling(R, u), scaling(R, v), 1).element
    assert got.coords[-1].a0 == u * v


def test_scaling_moves_positions():
    # sewing a scaling u into the outgoing puncture -2 (at infinity) rescales
    # the finite puncture by 1/u
    R = ParameterRing((), ("u",), 1)
    u = R.param("u")
    P = ModuliElement.kstar(R, (Fraction(1, 3),), [(), (1, ()), (1, ())])
    got = sew(scaling(R, u), P, 2).element
    assert got.positions == (Fraction(1, 3) * u.inverse(),)
    assert got.coords[-1].a0 == u


def test_identity_is_a_unit():
    R = ParameterRing(("e", "f"), (), 2)
    one = identity_element(R)
    for Q in (FX["theta-1"][0], scaling(R, 3, (R.param("e"),))):
        Q = moduli._embed(Q, R) if Q.ring != R else Q
        assert sew(one, Q, 1).element == Q
        assert sew(Q, one, 1).element == Q


def test_coincident_positions_rejected():
    R = ParameterRing(("e",), (), 2)
    with pytest.raises(CoincidentPunctures):
        ModuliElement.kstar(R, (0,), [(), (1, ()), (1, ())])
    # a nilpotent position collides with the incoming puncture at 0
    with pytest.raises(CoincidentPunctures):
        ModuliElement.kstar(R, (R.param("e"),), [(), (1, ()), (1, ())])


def test_two_series_coordinates_unsupported():
    R = ParameterRing(("e", "f"), (), 2)
    e, f = R.param("e"), R.param("f")
    A = ModuliElement.kstar(R, (Fraction(1, 3),), [(e,), (1, (f, 0, e)), (1, (e, 0, f))])
    B = ModuliElement.kstar(R, (Fraction(1, 4),), [(f,), (1, (0, e, f)), (1, (f, e, 0))])
    with pytest.raises(UnsupportedSewingShape):
        sew(A, B, 1)
    assert sew(A, B, 2).method == "theta_identity"


def test_bch_sewing_reports_gamma():
    R = ParameterRing(("a2", "b2"), (), 2)
    Q1 = ModuliElement.kstar(R, (), [(), (1, (0, R.param("a2")))])
    Q2 = ModuliElement.kstar(R, (), [(0, R.param("b2")), (1, ())])
    res = sew(Q1, Q2, 1, order=6)
    assert res.method == "bch"
    assert res.gamma.coefficient(a2=1, b2=1) == Fraction(1, 2)


@pytest.mark.parametrize("name", ["moebius", "theta-1", "theta-2"])
def test_associativity_all_cases(name):
    rows = moduli.verify_associativity(*FX[name], order=N)
    assert {r["case"] for r in rows} == {1, 2, 3}
    assert all(r["diff"] is None for r in rows)


def test_associativity_bch_triple():
    rows = moduli.verify_associativity(*FX["bch"], order=8)
    assert rows and all(r["diff"] is None for r in rows)


def test_permutation_law():
    assert moduli.verify_permutation_law(*FX["moebius"][:2], order=N) is None
    assert moduli.verify_permutation_law(*FX["perm"][:2], order=N) is None


def test_transposition_is_an_involution():
    Q = FX["moebius"][0]
    assert permute((2, 1), permute((2, 1), Q, N), N) == Q


def test_permuted_position_oracle():
    # swapping the outgoing punctures of (1/3; 0, (1,0), (1,0)) sends 1/3 to
    # infinity and infinity to -1/3 (the Moebius map z / (1 - 3z)); the
    # incoming coordinate becomes z / (1 + 3z), i.e. A_1 = -3
    S = ParameterRing((), (), 1)
    P = ModuliElement.kstar(S, (Fraction(1, 3),), [(), (1, ()), (1, ())])
    got = permute((2, 1), P, N)
    assert got.positions == (Fraction(-1, 3),)
    assert got.coords[-1].a0 == 1 and got.coords[-1].coeff(1) == -3


def test_I_involution_and_functoriality():
    for Q in FX["moebius"] + FX["bch"][:2]:
        assert moduli.verify_I_involution(Q, N) is None
    assert moduli.verify_I_functoriality(*FX["bch"][:2], order=8) is None
    assert operad_transform_I(FX["perm"][0], N).family == "K"


def test_law_detects_perturbation():
    M1, M2, M3 = FX["moebius"]
    R = M1.ring
    bumped = ModuliElement.kstar(R, M1.positions, [M1.coords[0], M1.coords[1], M1.coords[2].with_a0(M1.coords[2].a0 + 1)])
    left = sew(bumped, sew(M2, M3, 1, N).element, 1, N).element
    right = sew(sew(M1, M2, 1, N).element, M3, 1, N).element
    assert left != right


def test_sewing_identities():
    rep = moduli.verify_sewing_identities(order=8, degree=3)
    assert rep["passed"]


def test_sewing_identity_mutation_witness():
    rep = moduli.verify_sewing_identities(order=8, degree=3, mutate=("first", 1, 0))
    assert not rep["passed"]
    assert rep["first/pbw"] is not None or rep["first/derivation"] is not None


def test_L_I_closed_form_formal_z():
    R = ParameterRing((), ("z",), 1)
    got = moduli.l_i_coefficients(R.param("z"), 6)
    want = moduli.l_i_closed_form(R.param("z"), 6)
    assert got == want
    z = want["a0"].ring.param("z")
    assert want["Am3"] == -(z**-5)
    assert want["Ap3"] == -(z**1)


@settings(max_examples=10, deadline=None)
@given(st.fractions(min_value=-5, max_value=5, max_denominator=7).filter(lambda q: q != 0))
def test_L_I_rational_points(z):
    assert moduli.l_i_coefficients(z, 4) == moduli.l_i_closed_form(z, 4)
