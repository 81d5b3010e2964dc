from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import dense_contract

from vocalc.errors import WindowLimited
from vocalc.graded import (
    GradedMap1n,
    GradedSpace,
    compare_maps,
    compose_perm,
    contract_at_one,
    identity_map,
    mutate_map,
    random_map,
    random_space,
    sym_act,
    t_contract,
    verify_contraction_laws,
    verify_perm_law,
)

seeds = st.integers(0, 10**6)


def plain(f):
    return {(k, l, ow, oi): v for (k, l, ow, oi, te), v in f.entries.items()}


def test_space_validation():
    with pytest.raises(ValueError):
        GradedSpace(0, 1, (1,))
    with pytest.raises(ValueError):
        GradedSpace(2, 1, ())
    sp = GradedSpace.from_dict({-1: 1, 2: 2})
    assert sp.dims == (1, 0, 0, 2)
    assert sp.basis() == [(-1, 0), (2, 0), (2, 1)]


def test_contraction_small_example():
    sp = GradedSpace(0, 1, (1, 1))
    f = GradedMap1n(sp, 2, {(1, 0, (0, 1), (0, 0)): 2})
    g = GradedMap1n(sp, 2, {(0, 0, (1, 1), (0, 0)): 3})
    h = t_contract(f, g, 1)
    # f replaces the first factor of g's image; t records its weight 1
    assert h.entries == {(0, 0, (0, 1, 1), (0, 0, 0), (1,)): 6}
    assert contract_at_one(h, closed=True).entries == {(0, 0, (0, 1, 1), (0, 0, 0), ()): 6}


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 2), st.integers(1, 3))
def test_contraction_matches_dense_oracle(seed, m, n):
    rng = random.Random(seed)
    sp = random_space(rng, radius=3, max_dim=2)
    f, g = random_map(sp, m, rng, count=25), random_map(sp, n, rng, count=25)
    i = rng.randint(1, n)
    got = {(k, l, ow, oi, te): v for (k, l, ow, oi, te), v in t_contract(f, g, i).entries.items()}
    assert got == dense_contract(plain(f), plain(g), i)


def test_identity_is_neutral():
    rng = random.Random(3)
    sp = random_space(rng, radius=3)
    f = random_map(sp, 2, rng, count=30)
    one = identity_map(sp)
    assert contract_at_one(t_contract(one, f, 2), closed=True) == f
    assert contract_at_one(t_contract(f, one, 1), closed=True) == f


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 2), st.integers(1, 2), st.integers(1, 2))
def test_associativity_all_slots(seed, l, m, n):
    rng = random.Random(seed)
    sp = random_space(rng, radius=6, max_dim=2)
    f1, f2, f3 = (random_map(sp, k, rng, count=60) for k in (l, m, n))
    for j in range(1, n + 1):
        for i in range(1, m + n):
            rep = verify_contraction_laws(f1, f2, f3, i, j)
            assert rep["passed"], rep


def test_every_case_is_reached():
    rng = random.Random(0)
    sp = random_space(rng, radius=4)
    f1, f2, f3 = (random_map(sp, 2, rng, count=50) for _ in range(3))
    cases = {verify_contraction_laws(f1, f2, f3, i, j)["case"] for j in (1, 2) for i in (1, 2, 3)}
    assert cases == {1, 2, 3}


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_transposition_law(seed):
    rng = random.Random(seed)
    sp = random_space(rng, radius=6)
    assert verify_perm_law(random_map(sp, 2, rng, count=80), random_map(sp, 2, rng, count=80)) is None


@settings(max_examples=25, deadline=None)
@given(seeds, st.permutations([1, 2, 3]), st.permutations([1, 2, 3]))
def test_symmetric_group_action(seed, s, t):
    rng = random.Random(seed)
    f = random_map(random_space(rng, radius=2), 3, rng, count=20)
    assert sym_act(s, sym_act(t, f)) == sym_act(compose_perm(s, t), f)


def test_mutation_is_witnessed():
    rng = random.Random(5)
    sp = random_space(rng, radius=4)
    f1, f2 = random_map(sp, 2, rng, count=60), random_map(sp, 2, rng, count=60)
    left = t_contract(f1, f2, 1)
    right = t_contract(f1, f2, 1)
    bumped = mutate_map(right, rng)
    wit = compare_maps(left, bumped)
    assert wit is not None
    assert Fraction(wit["left"]) != Fraction(wit["right"])
    assert set(wit) >= {"in_weight", "in_index", "out_weights", "out_indices", "t_exponents"}


def test_window_limited_blocks_are_reported():
    sp = GradedSpace(0, 1, (1, 1))
    f = GradedMap1n(sp, 1, {(1, 0, (1,), (0,)): 1})
    g = GradedMap1n(sp, 1, {(0, 0, (1,), (0,)): 1})
    ft = t_contract(f, g, 1)
    with pytest.raises(WindowLimited) as err:
        contract_at_one(ft)
    assert err.value.blocks == [(0, (1,))]
    assert contract_at_one(ft, closed=True).entries


def test_t_names_are_aligned_by_name():
    rng = random.Random(9)
    sp = random_space(rng, radius=3)
    f1, f2, f3 = (random_map(sp, 1, rng, count=20) for _ in range(3))
    a = t_contract(f1, t_contract(f2, f3, 1, "s"), 1, "t")
    b = a.copy_with({(k, l, ow, oi, te[::-1]): v for (k, l, ow, oi, te), v in a.entries.items()}, tnames=a.tnames[::-1])
    assert compare_maps(a, b) is None
