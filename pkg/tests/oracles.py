"""Independent reference computations used to freeze expected values.

Nothing here imports the package's algorithms; conversions only read the
public data (coefficient dictionaries)."""
from __future__ import annotations

from fractions import Fraction
from itertools import product

import sympy as sp

x = sp.Symbol("x")


def to_sympy(coef, symbols=None):
    ring = coef.ring
    syms = symbols or {n: sp.Symbol(n) for n in ring.names}
    tot = sp.Integer(0)
    for exps, q in coef.terms.items():
        term = sp.Rational(q.numerator, q.denominator)
        for name, e in zip(ring.names, exps):
            term *= syms[name] ** e
        tot += term
    return sp.expand(tot)


def poly(terms: dict):
    return sum(sp.Rational(Fraction(v).numerator, Fraction(v).denominator) * x**k for k, v in terms.items())


def series_coeffs(expr, lo, hi):
    """Laurent coefficients of expr at x = 0 for exponents lo..hi."""
    s = sp.series(expr, x, 0, hi + 1).removeO()
    s = sp.expand(s)
    return {k: Fraction(str(sp.nsimplify(s.coeff(x, k)))) for k in range(lo, hi + 1) if s.coeff(x, k) != 0}


def compose_oracle(g: dict, f: dict, order: int):
    """g(f(x)) through x^order, f = c x + ..., g a Laurent polynomial."""
    lo = min(min(g), 0) * 1
    return series_coeffs(poly(g).subs(x, poly(f)), lo, order)


def revert_oracle(f: dict, order: int):
    """Compositional inverse by undetermined coefficients."""
    cs = sp.symbols(f"c1:{order + 1}")
    h = sum(c * x**k for k, c in enumerate(cs, start=1))
    expr = sp.expand(poly(f).subs(x, h))
    sol = {}
    for k in range(1, order + 1):
        eq = expr.coeff(x, k).subs(sol) - (1 if k == 1 else 0)
        sol[cs[k - 1]] = sp.solve(eq, cs[k - 1])[0]
    return {k: Fraction(str(sol[c])) for k, c in enumerate(cs, start=1) if sol[c] != 0}


def delta_box(radius: int, sign_b: int = -1):
    """x0^{-1} delta((x1 + sign_b x2)/x0) on [-r, r]^3 in (x0, x1, x2),
    expanded in nonnegative powers of x2, as {(e0, e1, e2): coefficient}."""
    out = {}
    for e0, e1, e2 in product(range(-radius, radius + 1), repeat=3):
        n = -e0 - 1
        if e2 < 0 or e1 + e2 != n:
            continue
        val = sp.binomial(n, e2) * sign_b**e2
        if val:
            out[(e0, e1, e2)] = Fraction(int(val))
    return out


def sl2_oracle(a, b):
    """Factor exp(-a L1) exp(-b L-1) = exp(-p L-1) s^{L0} ... in the 2x2
    representation L-1 = E, L0 = H/2, L1 = -F.  Returns sympy expressions
    (psi_-1, psi_0, psi_1)."""
    E = sp.Matrix([[0, 1], [0, 0]])
    Fm = sp.Matrix([[0, 0], [-1, 0]])
    M = (-a * Fm).exp() * (-b * E).exp()
    p, r, s = sp.symbols("p r s")
    H2 = sp.diag(s, 1 / s)
    # exp(-p E) diag(s, 1/s) exp(-r L1), the normal order of the right side
    R = (-p * E).exp() * H2 * (-r * Fm).exp()
    sol = sp.solve([sp.Eq(R[i, j], M[i, j]) for i in range(2) for j in range(2)], [p, r, s], dict=True)[0]
    return sp.simplify(sol[p]), 2 * sp.log(sol[s]), sp.simplify(sol[r])


def truncate_total(expr, names, degree):
    """Taylor-truncate a function of the named graded variables at total degree."""
    t = sp.Symbol("_t")
    syms = [sp.Symbol(n) for n in names]
    e = expr.subs({s: t * s for s in syms}, simultaneous=True)
    ser = sp.series(e, t, 0, degree + 1).removeO()
    return sp.expand(ser.subs(t, 1))


# ---------------------------------------------------------------------------
# graded maps, densely


def dense_apply(f_entries, vec: dict, slot: int):
    """Apply a map given by {(k, l, ow, oi): c} at tensor factor `slot` of
    vec = {((w...), (i...)): c}; t-bookkeeping appended as a weight list."""
    out = {}
    for (ws, idx, ts), c in vec.items():
        w, i = ws[slot], idx[slot]
        for (k, l, ow, oi), d in f_entries.items():
            if (k, l) != (w, i):
                continue
            key = (ws[:slot] + ow + ws[slot + 1:], idx[:slot] + oi + idx[slot + 1:], ts + (w,))
            out[key] = out.get(key, 0) + c * d
    return {k: v for k, v in out.items() if v}


def dense_contract(f_entries, g_entries, i: int):
    """(f 1*-i g) evaluated basis vector by basis vector."""
    out = {}
    for (k, l, ow, oi), c in g_entries.items():
        img = dense_apply(f_entries, {(ow, oi, ()): c}, i - 1)
        for (ws, idx, ts), v in img.items():
            key = (k, l, ws, idx, ts)
            out[key] = out.get(key, 0) + v
    return {k: v for k, v in out.items() if v}
