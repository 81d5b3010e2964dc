"""Acceptance criteria 1-10, each run through the suite runner at the pinned
defaults (N, D) = (8, 3) unless the criterion names another order.  Every
criterion records one PASS/FAIL line, printed at the end of the session."""
from __future__ import annotations

import time

import pytest

from vocalc import cli

RESULTS = {}

CRITERIA = {
    1: ("delta laws on radii 8, 10, 12 plus mutation witnesses", 5),
    2: ("exponential derivation equals composition, 50 instances", 10),
    3: ("BCH factorization, sl2 oracle, central factor", 30),
    4: ("first and second sewing identities, derivation and PBW", 30),
    5: ("sewing associativity, permutation, I involution and functoriality", 20),
    6: ("tangent functional coefficients for formal z", 10),
    7: ("t-contraction associativity and transposition", 10),
    8: ("VOC axioms, derived properties, mutations, reconstruction", 10),
    9: ("functor round trip, specialized cases, Step (a)", 20),
    10: ("full run at defaults", 180),
}


@pytest.fixture
def criterion(request):
    n = request.param
    state = {"ok": False, "seconds": None}
    yield n, state
    desc, limit = CRITERIA[n]
    secs = state["seconds"]
    timing = f"{secs:.2f} s, limit {limit} s" if secs is not None else "not timed"
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if state['ok'] else 'FAIL'}  {desc}  ({timing})"


def run(suites, order=8, degree=3):
    checks = []
    start = time.perf_counter()
    for s in suites:
        checks += cli.run_suite(cli.SuiteConfig(suite=s, order=order, degree=degree)).checks
    return {c["id"]: c for c in checks}, time.perf_counter() - start


def all_pass(checks):
    bad = {k: c for k, c in checks.items() if c["status"] != "pass"}
    assert not bad, bad


def finish(state, seconds, limit):
    state["seconds"] = seconds
    assert seconds < limit, f"took {seconds:.2f} s"
    state["ok"] = True


@pytest.mark.parametrize("criterion", [1], indirect=True)
def test_criterion_1_delta(criterion):
    n, state = criterion
    checks, secs = run(["delta"])
    all_pass(checks)
    assert {f"delta/laws/radius-{r}" for r in (8, 10, 12)} <= set(checks)
    for law in ("delta1", "delta2", "delta3"):
        assert "caught" in checks[f"delta/mutation/{law}"]["detail"]
    finish(state, secs, CRITERIA[n][1])


@pytest.mark.parametrize("criterion", [2], indirect=True)
def test_criterion_2_compose(criterion):
    n, state = criterion
    checks, secs = run(["compose"])
    all_pass(checks)
    assert len(checks) == 50
    finish(state, secs, CRITERIA[n][1])


@pytest.mark.parametrize("criterion", [3], indirect=True)
def test_criterion_3_bch(criterion):
    n, state = criterion
    checks, secs = run(["bch"])
    all_pass(checks)
    assert {"bch/pbw/A1", "bch/pbw/A2", "bch/pbw/A3", "bch/sl2-matrix-oracle", "bch/gamma-vanishes-on-sl2", "bch/gamma-central-factor"} <= set(checks)
    finish(state, secs, CRITERIA[n][1])


@pytest.mark.parametrize("criterion", [4], indirect=True)
def test_criterion_4_sewing_identities(criterion):
    n, state = criterion
    checks, secs = run(["sewing-identities"])
    all_pass(checks)
    for side in ("first", "second"):
        for rep in ("derivation", "pbw"):
            assert checks[f"sewing-identities/{side}-{rep}"]["status"] == "pass"
    finish(state, secs, CRITERIA[n][1])


@pytest.mark.parametrize("criterion", [5], indirect=True)
def test_criterion_5_moduli_laws(criterion):
    n, state = criterion
    checks, secs = run(["moduli-laws"])
    all_pass(checks)
    assert checks["moduli-laws/associativity/moebius"]["detail"]["cases"] == [1, 2, 3]
    assert {"moduli-laws/permutation/moebius", "moduli-laws/I-involution", "moduli-laws/I-functoriality"} <= set(checks)
    finish(state, secs, CRITERIA[n][1])


@pytest.mark.parametrize("criterion", [6], indirect=True)
def test_criterion_6_tangent_functional(criterion):
    n, state = criterion
    checks, secs = run(["l-i"])
    all_pass(checks)
    assert checks["l-i/z-formal"]["detail"]["coordinates"] == 13
    finish(state, secs, CRITERIA[n][1])


@pytest.mark.parametrize("criterion", [7], indirect=True)
def test_criterion_7_contraction(criterion):
    n, state = criterion
    checks, secs = run(["contraction-laws"])
    all_pass(checks)
    assert sum(c["detail"].get("instances", 0) for c in checks.values()) > 0
    assert "caught" in checks["contraction-laws/mutation"]["detail"]
    finish(state, secs, CRITERIA[n][1])


@pytest.mark.parametrize("criterion", [8], indirect=True)
def test_criterion_8_voc(criterion):
    n, state = criterion
    checks, secs = run(["voc-axioms", "voc-properties"])
    all_pass(checks)
    trivial_axioms = [k for k in checks if k.startswith("voc-axioms/trivial/")]
    trivial_props = [k for k in checks if k.startswith("voc-properties/trivial/")]
    assert len(trivial_axioms) == 7 and len(trivial_props) == 14
    assert checks["voc-axioms/mutation/rank-1-virasoro"]["detail"]["caught"]
    assert checks["voc-axioms/mutation/delta"]["detail"]["caught"]
    assert checks["voc-axioms/rational-reconstruction/trivial"]["status"] == "pass"
    finish(state, secs, CRITERIA[n][1])


@pytest.mark.parametrize("criterion", [9], indirect=True)
def test_criterion_9_functors(criterion):
    n, state = criterion
    checks, secs = run(["functor-roundtrip"])
    all_pass(checks)
    for fam in ("trivial", "group-like-1", "group-like-2", "group-like-3"):
        for key in ("roundtrip", "case_coproduct", "case_covacuum", "case_k1", "step_a", "step_a_operator"):
            assert f"functor-roundtrip/{fam}/{key}" in checks
    finish(state, secs, CRITERIA[n][1])


@pytest.mark.parametrize("criterion", [10], indirect=True)
def test_criterion_10_full_run(criterion, capsys):
    n, state = criterion
    start = time.perf_counter()
    code = cli.main(["--suite", "all"])
    secs = time.perf_counter() - start
    out = capsys.readouterr().out
    assert code == 0, out[-2000:]
    finish(state, secs, CRITERIA[n][1])
