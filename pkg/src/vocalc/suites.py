"""Named verification suites.  Each suite is a list of (check id, thunk);
a thunk returns (status, detail) with status in pass / fail /
window-limited / unsupported.  A fail detail always carries a witness."""
from __future__ import annotations

import random
from fractions import Fraction

from . import graded, moduli, voc
from .errors import (
    NoCertificateWithinBounds,
    UnsupportedSewingShape,
    VocalcError,
    WindowLimited,
)
from .series import ParameterRing, TruncatedSeries, compare, compose, delta_laws_check
from .virasoro import (
    LocalCoordinate,
    apply_exp_derivation,
    bch_factorize,
    map_from_coords,
    verify_bch,
)

SEED = 20240601


def _ok(diff, detail=None):
    if diff is None:
        return "pass", detail or {}
    return "fail", {"witness": _jsonable(diff), **(detail or {})}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (int, str, bool)) or x is None:
        return x
    return str(x)


def _expect_fail(diff, what):
    """A deliberate mutation must be caught with a witness."""
    if diff is None:
        return "fail", {"witness": {"reason": f"mutation of {what} went undetected"}}
    return "pass", {"caught": _jsonable(diff)}


# ---------------------------------------------------------------------------
# delta


def delta_suite(N, D, data=None):
    ring = ParameterRing((), (), 1)
    X = TruncatedSeries(ring, ("x1", "x2"), None, {(1, 1): 1})
    checks = []
    for r in (N, N + 2, N + 4):
        def run(r=r):
            rep = delta_laws_check(X, radius=r)
            return _ok(rep.witnesses or None, {"window": rep.window})
        checks.append((f"delta/laws/radius-{r}", run))
    for law, exps in (("delta1", (0, 0)), ("delta2", (-1, 0, 0)), ("delta3", (-1, 0, 0))):
        def mut(law=law, exps=exps):
            rep = delta_laws_check(X, radius=N, mutate=(law, exps))
            return _expect_fail(rep.witnesses.get(law), law)
        checks.append((f"delta/mutation/{law}", mut))
    return checks


# ---------------------------------------------------------------------------
# compose


def compose_instances(count=50, seed=SEED):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        A = [Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(rng.randint(1, 4))]
        terms = {rng.randint(-4, 6): Fraction(rng.randint(-3, 3), rng.randint(1, 4)) for _ in range(3)}
        out.append((A, terms))
    return out


def compose_check(A, terms, N):
    ring = ParameterRing((), (), 1)
    g = TruncatedSeries.univariate(ring, "x", terms)
    left = apply_exp_derivation([ring.coerce(a) for a in A], g, N)
    right = compose(g, map_from_coords(LocalCoordinate.make(ring, 1, A), N, "x"), N)
    w = left.window.intersect(right.window)
    if w is None:
        return "window-limited", {"reason": "no shared window"}
    return _ok(compare(left.restrict(w), right.restrict(w)), {"window": str(w)})


def compose_suite(N, D, data=None):
    return [
        (f"compose/instance-{k}", lambda A=A, t=t: compose_check(A, t, N))
        for k, (A, t) in enumerate(compose_instances())
    ]


# ---------------------------------------------------------------------------
# bch


def _bch_ring(D, L=3):
    names = tuple(f"a{j}" for j in range(1, L + 1)) + tuple(f"b{j}" for j in range(1, L + 1))
    return ParameterRing(names, ("al", "be"), D)


def sl2_matrix_factorization(a, b):
    """Oracle in the 2x2 representation L(-1) = E, L(0) = H/2, L(1) = -F:
    e^{-a L1} e^{-b L-1} = [[1, -b], [a, 1 - ab]] factors as
    e^{-p L-1} e^{psi0 L0} e^{-r L1} with s = e^{psi0/2} = 1/(1 - ab),
    p = b s and r = a s."""
    m11 = 1 - a * b
    s = m11.inverse()
    return {"psi_minus": b * s, "psi_plus": a * s, "psi0": 2 * s.log()}


def bch_suite(N, D, data=None):
    ring = _bch_ring(D)
    P = ring.param
    al, be = P("al"), P("be")
    checks = []
    shapes = {
        "A1": ([P("a1")], [P("b1")]),
        "A2": ([P("a1"), P("a2")], [P("b1"), P("b2")]),
        "A3": ([P("a1"), P("a2"), P("a3")], [P("b1"), P("b2"), P("b3")]),
        "mixed": ([0, P("a2"), P("a3")], [P("b1"), 0, P("b3")]),
    }
    for name, (A, B) in shapes.items():
        def run(A=A, B=B):
            fac = bch_factorize(A, B, al, be, N, D)
            return _ok(verify_bch(fac, A, B, al, be), {"gamma": str(fac.gamma)})
        checks.append((f"bch/pbw/{name}", run))

    def sl2():
        r6 = ParameterRing(("a", "b"), (), max(D, 6))
        a, b = r6.param("a"), r6.param("b")
        fac = bch_factorize([a], [b], r6.one(), r6.one(), N, r6.max_degree)
        want = sl2_matrix_factorization(a, b)
        got = {"psi_minus": fac.psi(-1), "psi_plus": fac.psi(1), "psi0": fac.psi0}
        for k in want:
            if want[k] != got[k]:
                return "fail", {"witness": {"component": k, "oracle": str(want[k]), "bch": str(got[k])}}
        extra = [k for k in (-3, -2, 2, 3) if not fac.psi(k).is_zero()]
        if extra or not fac.gamma.is_zero():
            return "fail", {"witness": {"nonzero_psi": extra, "gamma": str(fac.gamma)}}
        return "pass", {}
    checks.append(("bch/sl2-matrix-oracle", sl2))

    def gamma_zero():
        fac = bch_factorize([P("a1")], [P("b1")], al, be, N, D)
        return _ok(None if fac.gamma.is_zero() else {"gamma": str(fac.gamma)})
    checks.append(("bch/gamma-vanishes-on-sl2", gamma_zero))

    def gamma_lead():
        r = ParameterRing(("a2", "b2"), (), 2)
        fac = bch_factorize([0, r.param("a2")], [0, r.param("b2")], r.one(), r.one(), N, 2)
        c = fac.gamma.coefficient(a2=1, b2=1)
        return _ok(None if c == Fraction(2 ** 3 - 2, 12) else {"coefficient": str(c), "expected": "1/2"})
    checks.append(("bch/gamma-central-factor", gamma_lead))
    return checks


# ---------------------------------------------------------------------------
# sewing identities, moduli laws, L_I


def sewing_suite(N, D, data=None):
    cache = {}

    def report():
        if "r" not in cache:
            cache["r"] = moduli.verify_sewing_identities(order=N, degree=D)
        return cache["r"]

    checks = []
    for key in ("second/derivation", "second/pbw", "first/derivation", "first/pbw"):
        def run(key=key):
            return _ok(report()[key])
        checks.append((f"sewing-identities/{key.replace('/', '-')}", run))

    def mut():
        r = moduli.verify_sewing_identities(order=N, degree=D, mutate=("second", 1, 0))
        return _expect_fail(r["second/pbw"] or r["second/derivation"], "a left-side binomial")
    checks.append(("sewing-identities/mutation", mut))
    return checks


def law_fixtures():
    """Generator-class triples in the supported sewing shapes.  Scalings are
    large so that the formally sewn discs keep the punctures apart."""
    R = ParameterRing(("e", "f"), (), 2)
    e, f = R.param("e"), R.param("f")
    F = Fraction

    def K2(pos, ci, c1, c0):
        return moduli.ModuliElement.kstar(R, (F(pos),), [ci, c1, c0])

    def K1(ci, c0):
        return moduli.ModuliElement.kstar(R, (), [ci, c0])

    M1 = K2(F(1, 3), (e,), (5, (F(1, 2),)), (8, (f,)))
    M2 = K2(F(-1, 4), (1,), (6, (e,)), (7, (F(1, 3),)))
    M3 = K2(F(2, 5), (f,), (9, (e,)), (10, (F(-1, 2),)))
    T1 = K1((e, 0, f), (8, (f, e)))
    T2 = K2(F(1, 3), (e,), (5, (F(1, 2),)), (8, (f, e)))
    B = ParameterRing(("a1", "a2", "b1", "b2", "c1", "c2"), ("al",), 3)
    P = B.param
    B1 = moduli.ModuliElement.kstar(B, (), [(P("c1"),), (P("al"), (P("a1"), P("a2")))])
    B2 = moduli.ModuliElement.kstar(B, (), [(P("b1"), P("b2")), (2, (0, P("c2")))])
    B3 = moduli.ModuliElement.kstar(B, (), [(P("a2"), P("c2")), (3, (P("b1"), P("c1")))])
    S = ParameterRing((), (), 1)
    P1 = moduli.ModuliElement.kstar(S, (F(1, 3),), [(), (1, ()), (1, ())])
    P2 = moduli.ModuliElement.kstar(S, (F(2, 7),), [(), (1, ()), (1, ())])
    return {
        "moebius": (M1, M2, M3),
        "theta-1": (T1, M2, M3),
        "theta-2": (T2, M2, M3),
        "bch": (B1, B2, B3),
        "perm": (P1, P2, M1),
    }


def _input_moduli_checks(Q, N):
    checks = [("moduli-laws/input/I-involution", lambda: _ok(moduli.verify_I_involution(Q, N)))]
    if Q.family == "Kstar" and Q.n == 2:
        checks.append(("moduli-laws/input/permutation", lambda: _ok(moduli.verify_permutation_law(Q, Q, N))))
    if Q.family == "Kstar" and Q.n >= 1:
        def assoc():
            rows = moduli.verify_associativity(Q, Q, Q, N)
            bad = [r for r in rows if r["diff"] is not None]
            return _ok(bad[0] if bad else None, {"instances": len(rows)})
        checks.append(("moduli-laws/input/associativity", assoc))
    return checks


def moduli_suite(N, D, data=None):
    if data is not None:
        return _input_moduli_checks(data, N)
    fx = law_fixtures()
    checks = []
    for name in ("moebius", "theta-1", "theta-2", "bch"):
        def run(name=name):
            Q1, Q2, Q3 = fx[name]
            try:
                rows = moduli.verify_associativity(Q1, Q2, Q3, N)
            except UnsupportedSewingShape as exc:
                return "unsupported", {"reason": str(exc)}
            bad = [r for r in rows if r["diff"] is not None]
            cases = sorted({r["case"] for r in rows})
            return _ok(bad[0] if bad else None, {"cases": cases, "instances": len(rows)})
        checks.append((f"moduli-laws/associativity/{name}", run))

    def perm_moebius():
        P1, P2, _ = fx["perm"]
        return _ok(moduli.verify_permutation_law(P1, P2, N))
    checks.append(("moduli-laws/permutation/moebius", perm_moebius))

    def perm_general():
        M1, M2, _ = fx["moebius"]
        return _ok(moduli.verify_permutation_law(M1, M2, N))
    checks.append(("moduli-laws/permutation/scaled", perm_general))

    def involution():
        diffs = [moduli.verify_I_involution(Q, N) for Q in fx["moebius"] + fx["bch"][:1]]
        bad = [d for d in diffs if d is not None]
        return _ok(bad[0] if bad else None)
    checks.append(("moduli-laws/I-involution", involution))

    def functorial():
        B1, B2, _ = fx["bch"]
        return _ok(moduli.verify_I_functoriality(B1, B2, N))
    checks.append(("moduli-laws/I-functoriality", functorial))
    return checks


def l_i_suite(N, D, data=None):
    K = 6
    zring = ParameterRing((), ("z",), 1)
    checks = []
    for label, z in (("z-formal", zring.param("z")), ("z-2", Fraction(2)), ("z-neg-1-3", Fraction(-1, 3))):
        def run(z=z):
            got = moduli.l_i_coefficients(z, K)
            want = moduli.l_i_closed_form(z, K)
            for key in sorted(want, key=str):
                if got.get(key) != want[key]:
                    return "fail", {"witness": {"coordinate": str(key), "got": str(got.get(key)), "expected": str(want[key])}}
            return "pass", {"coordinates": len(want)}
        checks.append((f"l-i/{label}", run))
    return checks


# ---------------------------------------------------------------------------
# contraction laws


def _laws_on(f1, f2, f3):
    bad, n = None, 0
    for j in range(1, f3.n + 1):
        for i in range(1, f2.n + f3.n):
            r = graded.verify_contraction_laws(f1, f2, f3, i, j)
            n += 1
            if not r["passed"] and bad is None:
                bad = {"i": i, "j": j, "case": r["case"], "assoc": r["assoc"], "perm": r.get("perm")}
    return _ok(bad, {"instances": n})


def contraction_suite(N, D, data=None):
    if data is not None:
        if data.n == 0:
            return [("contraction-laws/input", lambda: ("unsupported", {"reason": "arity-0 maps have no slot to contract"}))]
        return [("contraction-laws/input", lambda: _laws_on(data, data, data))]
    checks = []
    rng = random.Random(SEED)
    trials = []
    for _ in range(8):
        sp = graded.random_space(rng, radius=6, max_dim=2)
        maps = [graded.random_map(sp, rng.choice((1, 2)), rng, count=60) for _ in range(3)]
        trials.append(maps)
    for t, (f1, f2, f3) in enumerate(trials):
        checks.append((f"contraction-laws/random-{t}", lambda f1=f1, f2=f2, f3=f3: _laws_on(f1, f2, f3)))

    def perm_pairs():
        rr = random.Random(SEED + 1)
        for _ in range(5):
            sp = graded.random_space(rr, radius=6, max_dim=2)
            d = graded.verify_perm_law(graded.random_map(sp, 2, rr, count=80), graded.random_map(sp, 2, rr, count=80))
            if d is not None:
                return _ok(d)
        return "pass", {}
    checks.append(("contraction-laws/transposition", perm_pairs))

    def mutation():
        rr = random.Random(SEED + 2)
        sp = graded.random_space(rr, radius=6, max_dim=2)
        f1, f2 = graded.random_map(sp, 2, rr, count=80), graded.random_map(sp, 2, rr, count=80)
        left = graded.t_contract(f1, f2, 1)
        # mutate a block that actually feeds the contraction
        used = sorted({(ow, oi) for (k, l, ow, oi, te) in f2.entries})
        key = next(k for k in sorted(f1.entries) if ((k[0],), (k[1],)) in [(o[:1], i[:1]) for o, i in used])
        bumped = dict(f1.entries)
        bumped[key] += 1
        right = graded.t_contract(f1.copy_with(bumped), f2, 1)
        return _expect_fail(graded.compare_maps(left, right), "a map block")
    checks.append(("contraction-laws/mutation", mutation))
    return checks


# ---------------------------------------------------------------------------
# VOC suites


def _default_vocs():
    rng = random.Random(SEED)
    fam = [("trivial", voc.trivial_voc())]
    for r in (1, 2, 3):
        fam.append((f"group-like-{r}", voc.group_like_voc(r, rng)))
    return fam


def _axiom_checks(name, V, N, prefix):
    checks = []
    for ax in voc.AXIOMS:
        def run(ax=ax, V=V):
            r = voc.check_axioms(V, N, only=ax)[ax]
            return r["status"], {k: v for k, v in r.items() if k != "status"}
        checks.append((f"{prefix}/{name}/{ax}", run))
    return checks


def voc_axioms_suite(N, D, data=None):
    if data is not None:
        return _axiom_checks("input", data, N, "voc-axioms")
    checks = []
    for name, V in _default_vocs():
        checks += _axiom_checks(name, V, N, "voc-axioms")

    def rank_one():
        r = voc.check_axioms(voc.trivial_voc(rank_d=1), N, only="virasoro")["virasoro"]
        return _expect_fail(r.get("witness"), "the rank")
    checks.append(("voc-axioms/mutation/rank-1-virasoro", rank_one))

    def delta_mut():
        V = voc.group_like_voc(2, random.Random(SEED))
        r = voc.check_axioms(voc.mutate_delta(V), N)
        w = r["counit"].get("witness") or r["jacobi"].get("witness")
        return _expect_fail(w, "a coproduct entry")
    checks.append(("voc-axioms/mutation/delta", delta_mut))

    def rr():
        try:
            cert = voc.rational_reconstruct(voc.trivial_voc(), (0, 0), {((0, 0),) * 3: 1}, order=min(N, 6))
        except NoCertificateWithinBounds as exc:
            return "window-limited", {"reason": str(exc)}
        ok = cert.g == {(0, 0): 1} and (cert.r, cert.s, cert.t) == (0, 0, 0) and cert.commutativity and cert.associativity
        return _ok(None if ok else {"g": str(cert.g), "rst": [cert.r, cert.s, cert.t]})
    checks.append(("voc-axioms/rational-reconstruction/trivial", rr))
    return checks


def voc_properties_suite(N, D, data=None):
    fam = [("input", data)] if data is not None else _default_vocs()
    checks = []
    for name, V in fam:
        for prop in voc.PROPERTIES:
            def run(prop=prop, V=V):
                r = voc.check_derived_properties(V, N, only=prop)[prop]
                return r["status"], {k: v for k, v in r.items() if k != "status"}
            checks.append((f"voc-properties/{name}/{prop}", run))
    return checks


def functor_suite(N, D, data=None):
    fam = [("input", data)] if data is not None else _default_vocs()
    checks = []
    for name, V in fam:
        cache = {}

        def report(V=V, cache=cache):
            if "r" not in cache:
                try:
                    cache["r"] = voc.check_roundtrip_generators(V, N, min(D, 2))
                except WindowLimited as exc:
                    cache["r"] = exc
            return cache["r"]

        for key in ("roundtrip", "case_coproduct", "case_covacuum", "case_k1", "step_a", "step_a_operator", "permutation"):
            def run(key=key, report=report):
                r = report()
                if isinstance(r, WindowLimited):
                    return "window-limited", {"reason": str(r), "blocks": _jsonable(r.blocks)}
                return _ok(r[key])
            checks.append((f"functor-roundtrip/{name}/{key}", run))
    return checks


# which loaded data type each suite accepts
INPUT_KIND = {
    "moduli-laws": "ModuliElement",
    "contraction-laws": "GradedMap1n",
    "voc-axioms": "VocData",
    "voc-properties": "VocData",
    "functor-roundtrip": "VocData",
}

SUITES = {
    "delta": delta_suite,
    "compose": compose_suite,
    "bch": bch_suite,
    "sewing-identities": sewing_suite,
    "moduli-laws": moduli_suite,
    "l-i": l_i_suite,
    "contraction-laws": contraction_suite,
    "voc-axioms": voc_axioms_suite,
    "voc-properties": voc_properties_suite,
    "functor-roundtrip": functor_suite,
}


def run_check(thunk):
    try:
        return thunk()
    except UnsupportedSewingShape as exc:
        return "unsupported", {"reason": str(exc)}
    except WindowLimited as exc:
        return "window-limited", {"reason": str(exc)}
    except VocalcError as exc:
        return "fail", {"witness": {"error": type(exc).__name__, "message": str(exc)}}
