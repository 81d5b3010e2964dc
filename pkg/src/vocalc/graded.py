"""Graded spaces, the maps Hom(V, completed V^{(x)n}), and t-contraction.

A GradedMap1n stores sparse entries

    (in_weight, in_index, out_weights, out_indices, t_exponents) -> Fraction

where t_exponents records the intermediate weights of earlier
t-contractions, one per named bookkeeping variable.  The space is known on
weights [wmin, wmax]; anything with a weight above wmax is unknown and is
never summed or compared.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .errors import WindowLimited


@dataclass(frozen=True)
class GradedSpace:
    wmin: int
    wmax: int
    dims: tuple  # dims[k - wmin] = dim V_(k)

    def __post_init__(self):
        if self.wmax < self.wmin:
            raise ValueError("empty weight range")
        if len(self.dims) != self.wmax - self.wmin + 1:
            raise ValueError("one dimension per weight is required")
        if any(d < 0 for d in self.dims):
            raise ValueError("dimensions must be nonnegative")

    @classmethod
    def from_dict(cls, dims: dict) -> GradedSpace:
        lo, hi = min(dims), max(dims)
        return cls(lo, hi, tuple(dims.get(k, 0) for k in range(lo, hi + 1)))

    def dim(self, k: int) -> int:
        if k < self.wmin or k > self.wmax:
            return 0
        return self.dims[k - self.wmin]

    def weights(self):
        return [k for k in range(self.wmin, self.wmax + 1) if self.dim(k)]

    def basis(self):
        return [(k, l) for k in self.weights() for l in range(self.dim(k))]

    def known(self, k: int) -> bool:
        """Weights below wmin are zero; weights above wmax are unknown."""
        return k <= self.wmax


@dataclass
class GradedMap1n:
    space: GradedSpace
    n: int
    entries: dict = field(default_factory=dict)
    tnames: tuple = ()

    def __post_init__(self):
        clean = {}
        for key, v in self.entries.items():
            v = _coerce(v)
            if v:
                k, l, ow, oi, te = key if len(key) == 5 else (*key, ())
                clean[(k, l, tuple(ow), tuple(oi), tuple(te))] = v
        self.entries = clean

    def copy_with(self, entries, n=None, tnames=None) -> GradedMap1n:
        return GradedMap1n(self.space, self.n if n is None else n, entries, self.tnames if tnames is None else tnames)

    def image(self, k: int, l: int) -> dict:
        """f(e^(k)_l) as {(out_weights, out_indices, t_exps): coeff}."""
        return self._by_input().get((k, l), {})

    def _by_input(self):
        cache = getattr(self, "_cache", None)
        if cache is None:
            cache = {}
            for (k, l, ow, oi, te), v in self.entries.items():
                cache.setdefault((k, l), {})[(ow, oi, te)] = v
            object.__setattr__(self, "_cache", cache)
        return cache

    def scale(self, c) -> GradedMap1n:
        """Multiply every entry by a rational or a ring coefficient."""
        c = _coerce(c)
        return self.copy_with({key: v * c for key, v in self.entries.items()})

    def __add__(self, other: GradedMap1n) -> GradedMap1n:
        _check_compatible(self, other)
        out = dict(self.entries)
        for key, v in other.entries.items():
            out[key] = out.get(key, 0) + v
        return self.copy_with(out)

    def __eq__(self, other):
        return isinstance(other, GradedMap1n) and compare_maps(self, other) is None


def _coerce(v):
    # rationals stay exact; ring coefficients pass through
    if isinstance(v, (int, str, Fraction)):
        return Fraction(v)
    return v


def _check_compatible(f, g):
    if f.space != g.space or f.n != g.n or f.tnames != g.tnames:
        raise ValueError("maps live in different spaces")


def compare_maps(f: GradedMap1n, g: GradedMap1n):
    """None when equal, else a witness (weights, indices, t-exponents)."""
    if f.n != g.n or f.space != g.space:
        return {"reason": "different arity or space"}
    # align t variables by name
    fg = _align(f, g.tnames)
    gg = _align(g, f.tnames) if set(f.tnames) != set(g.tnames) else g
    if fg is None or gg is None:
        return {"reason": f"t variables differ: {f.tnames} vs {g.tnames}"}
    for key in sorted(set(fg.entries) | set(gg.entries)):
        a, b = fg.entries.get(key, Fraction(0)), gg.entries.get(key, Fraction(0))
        if a - b:
            k, l, ow, oi, te = key
            return {
                "in_weight": k,
                "in_index": l,
                "out_weights": ow,
                "out_indices": oi,
                "t_exponents": dict(zip(gg.tnames, te)),
                "left": str(a),
                "right": str(b),
            }
    return None


def _align(f: GradedMap1n, names: tuple):
    """Reorder f's t exponents to follow `names`."""
    if f.tnames == names:
        return f
    if set(f.tnames) != set(names):
        return None
    pos = [f.tnames.index(nm) for nm in names]
    out = {}
    for (k, l, ow, oi, te), v in f.entries.items():
        out[(k, l, ow, oi, tuple(te[p] for p in pos))] = v
    return GradedMap1n(f.space, f.n, out, tuple(names))


def t_contract(f: GradedMap1n, g: GradedMap1n, i: int, tname: str = "t") -> GradedMap1n:
    """(f 1*-i g)_t: f inserted at output slot i of g, the intermediate weight
    recorded as the exponent of t."""
    if f.space != g.space:
        raise ValueError("maps live on different spaces")
    if not 1 <= i <= g.n:
        raise ValueError(f"slot {i} out of range for arity {g.n}")
    if tname in f.tnames or tname in g.tnames:
        raise ValueError(f"t variable {tname} already used")
    names = tuple(g.tnames) + tuple(f.tnames) + (tname,)
    out = {}
    fin = f._by_input()
    for (k, l, ow, oi, te), c in g.entries.items():
        w, idx = ow[i - 1], oi[i - 1]
        img = fin.get((w, idx))
        if not img:
            continue
        for (fw, fi, fte), d in img.items():
            key = (
                k,
                l,
                ow[: i - 1] + fw + ow[i:],
                oi[: i - 1] + fi + oi[i:],
                te + fte + (w,),
            )
            out[key] = out.get(key, 0) + c * d
    return GradedMap1n(f.space, f.n + g.n - 1, out, names)


def contract_at_one(ft: GradedMap1n, tname: str | None = None, closed: bool = False) -> GradedMap1n:
    """Set a t variable (default: the last one) to 1.

    A block whose t-support reaches the top known weight may have further
    terms beyond the window; such blocks are reported, not summed.  With
    closed=True the space is known to vanish above wmax and every sum is final.
    """
    if not ft.tnames:
        return ft
    name = ft.tnames[-1] if tname is None else tname
    pos = ft.tnames.index(name)
    top = ft.space.wmax
    out = {}
    limited = set()
    for (k, l, ow, oi, te), v in ft.entries.items():
        block = (k, ow)
        if not closed and te[pos] >= top:
            limited.add(block)
        key = (k, l, ow, oi, te[:pos] + te[pos + 1:])
        out[key] = out.get(key, 0) + v
    if limited:
        raise WindowLimited(
            f"{len(limited)} block(s) have t-support reaching weight {top}",
            sorted(limited),
        )
    return GradedMap1n(ft.space, ft.n, out, ft.tnames[:pos] + ft.tnames[pos + 1:])


def sym_act(sigma, f: GradedMap1n) -> GradedMap1n:
    """sigma(v_1 (x) ... (x) v_n) = v_{sigma^-1(1)} (x) ... : the factor in
    position q moves to position sigma(q); sigma[q-1] = sigma(q)."""
    sigma = tuple(sigma)
    if sorted(sigma) != list(range(1, f.n + 1)):
        raise ValueError(f"{sigma} is not a permutation of {f.n} letters")
    inv = [0] * f.n
    for q, s in enumerate(sigma, start=1):
        inv[s - 1] = q
    out = {}
    for (k, l, ow, oi, te), v in f.entries.items():
        nw = tuple(ow[inv[p] - 1] for p in range(f.n))
        ni = tuple(oi[inv[p] - 1] for p in range(f.n))
        out[(k, l, nw, ni, te)] = v
    return f.copy_with(out)


def compose_perm(s, t) -> tuple:
    """(s t)(q) = s(t(q))."""
    return tuple(s[t[q] - 1] for q in range(len(t)))


def identity_map(space: GradedSpace) -> GradedMap1n:
    return GradedMap1n(space, 1, {(k, l, (k,), (l,)): 1 for k, l in space.basis()})


def random_map(space: GradedSpace, n: int, rng: random.Random, density: float = 0.3, weight_shift=None, count=None) -> GradedMap1n:
    """Random sparse map.  With weight_shift set, only output weights summing
    to in_weight + weight_shift occur (the shape of a coproduct component).
    With count set, exactly that many random entries are drawn instead."""
    out = {}
    basis = space.basis()
    if count is not None:
        while len(out) < count:
            k, l = rng.choice(basis)
            outs = [rng.choice(basis) for _ in range(n)]
            out[(k, l, tuple(b[0] for b in outs), tuple(b[1] for b in outs))] = Fraction(rng.randint(1, 3), rng.randint(1, 3)) * rng.choice((-1, 1))
        return GradedMap1n(space, n, out)
    for k, l in basis:
        for outs in product(basis, repeat=n):
            ow = tuple(b[0] for b in outs)
            if weight_shift is not None and sum(ow) != k + weight_shift:
                continue
            if rng.random() < density:
                out[(k, l, ow, tuple(b[1] for b in outs))] = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
    return GradedMap1n(space, n, out)


def random_space(rng: random.Random, radius: int = 6, max_dim: int = 2) -> GradedSpace:
    return GradedSpace(-radius, radius, tuple(rng.randint(1, max_dim) for _ in range(2 * radius + 1)))


def mutate_map(f: GradedMap1n, rng: random.Random) -> GradedMap1n:
    """Add 1 to one entry (or create one)."""
    entries = dict(f.entries)
    if entries:
        key = rng.choice(sorted(entries))
    else:
        k, l = f.space.basis()[0]
        key = (k, l, (k,) * f.n, (l,) * f.n, (0,) * len(f.tnames))
    entries[key] = entries.get(key, 0) + 1
    return f.copy_with(entries)


def verify_contraction_laws(f1: GradedMap1n, f2: GradedMap1n, f3: GradedMap1n, i: int, j: int) -> dict:
    """The applicable associativity case as a bivariate (t1, t2) identity,
    plus the transposition law when f1 and f2 have arity 2."""
    l, m, n = f1.n, f2.n, f3.n
    if not (1 <= j <= n and 1 <= i <= m + n - 1):
        raise ValueError("indices out of range")
    lhs = t_contract(f1, t_contract(f2, f3, j, "t1"), i, "t2")
    if i < j:
        case = 1
        rhs = t_contract(f2, t_contract(f1, f3, i, "t2"), j + l - 1, "t1")
    elif i < j + m:
        case = 2
        rhs = t_contract(t_contract(f1, f2, i - j + 1, "t2"), f3, j, "t1")
    else:
        case = 3
        rhs = t_contract(f2, t_contract(f1, f3, i - m + 1, "t2"), j, "t1")
    report = {"case": case, "assoc": compare_maps(lhs, rhs), "blocks": len(lhs.entries)}
    if f1.n == 2 and f2.n == 2:
        report["perm"] = verify_perm_law(f1, f2)
    report["passed"] = report["assoc"] is None and report.get("perm") is None
    return report


def verify_perm_law(f1: GradedMap1n, f2: GradedMap1n):
    """f1 1*-1 f2 = (Id (x) T)(T (x) Id)(f1 1*-2 (T f2)) as t-series."""
    left = t_contract(f1, f2, 1)
    right = sym_act((3, 1, 2), t_contract(f1, sym_act((2, 1), f2), 2))
    return compare_maps(left, right)
