"""Exponential coordinates, the derivation action, and a PBW model of U(Vir).

A local coordinate at zero is stored as (a0, A) and stands for

    exp(sum_j A_j w^{j+1} d/dw) a0^{w d/dw} w  =  a0 * phi_A(w),

with phi_A the time-one flow of sum_j A_j w^{j+1} d/dw.  At infinity the same
pair stands for exp(-sum_j A_j w^{-j+1} d/dw) a0^{-w d/dw} (1/w), which works
out to a0 * phi_A(1/w).

Exponentials of derivations act by substitution:
    exp(D) g = g o exp(D) x,   exp(D1) exp(D2) x = (exp(D2) x) o (exp(D1) x).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache

from .errors import (
    EmptyResultWindow,
    NotACoordinateMap,
    UnderdeterminedAtDegree,
    WindowTooSmall,
)
from .series import Coefficient, ParameterRing, TruncatedSeries

# ---------------------------------------------------------------------------
# local coordinates


@dataclass(frozen=True, eq=False)
class LocalCoordinate:
    a0: Coefficient
    A: tuple
    vanishing_at: str = "zero"
    # False when A is only known through len(A)
    exact: bool = True

    def __post_init__(self):
        if self.vanishing_at not in ("zero", "infinity"):
            raise ValueError("vanishing_at must be 'zero' or 'infinity'")
        ring = self.a0.ring
        object.__setattr__(self, "A", tuple(ring.coerce(x) for x in self.A))
        if not self.a0.is_invertible():
            raise NotACoordinateMap(f"a0 = {self.a0} is not invertible")

    @classmethod
    def make(cls, ring: ParameterRing, a0=1, A=(), vanishing_at="zero") -> LocalCoordinate:
        return cls(ring.coerce(a0), tuple(ring.coerce(x) for x in A), vanishing_at)

    @classmethod
    def trivial(cls, ring: ParameterRing, vanishing_at="zero") -> LocalCoordinate:
        return cls(ring.one(), (), vanishing_at)

    @property
    def ring(self) -> ParameterRing:
        return self.a0.ring

    @property
    def order(self) -> int:
        return len(self.A)

    def coeff(self, j: int) -> Coefficient:
        return self.A[j - 1] if 1 <= j <= len(self.A) else self.ring.zero()

    def stripped(self) -> tuple:
        A = list(self.A)
        while A and not A[-1].terms:
            A.pop()
        return tuple(A)

    def scaled(self, a) -> tuple:
        """The sequence A(a) = (a^j A_j)."""
        a = self.ring.coerce(a)
        return tuple(a ** (j + 1) * x for j, x in enumerate(self.A))

    def with_a0(self, a0) -> LocalCoordinate:
        return LocalCoordinate(self.ring.coerce(a0), self.A, self.vanishing_at, self.exact)

    def field(self) -> dict:
        return {j + 1: x for j, x in enumerate(self.A) if x.terms}

    def is_nilpotent(self) -> bool:
        return all(x.is_nilpotent() for x in self.A)

    def truncated(self, M: int) -> LocalCoordinate:
        if self.exact and len(self.stripped()) <= M:
            return self
        return LocalCoordinate(self.a0, self.A[:M], self.vanishing_at, False)

    def __eq__(self, other):
        if not isinstance(other, LocalCoordinate):
            return NotImplemented
        return (
            self.vanishing_at == other.vanishing_at
            and self.a0 == other.a0
            and self.stripped() == other.stripped()
        )

    def __hash__(self):
        return hash((self.vanishing_at, self.a0, self.stripped()))

    def __repr__(self):
        A = ", ".join(str(x) for x in self.stripped()) or "0"
        return f"LocalCoordinate({self.vanishing_at}: a0={self.a0}, A=({A}))"


# ---------------------------------------------------------------------------
# exponentials of vector fields


def _apply_field(fld: dict, g: TruncatedSeries) -> TruncatedSeries:
    """sum_k c_k x^{k+1} g'(x)."""
    dg = g.derivative()
    out = None
    for k, c in sorted(fld.items()):
        term = dg.shift(k + 1).scale(c)
        out = term if out is None else out + term
    return out


def _reflect_field(fld: dict) -> dict:
    # x = 1/u turns x^{k+1} d/dx into -u^{1-k} d/du
    return {-k: -c for k, c in fld.items()}


def exp_vector_field(fld: dict, g: TruncatedSeries, order=None) -> TruncatedSeries:
    """exp(sum_k c_k x^{k+1} d/dx) g for a univariate series g.

    Terminates when every coefficient is nilpotent (g exact), or when all
    non-nilpotent terms push degrees one way (k >= 1: expansion at zero, cut at
    x^order; k <= -1: expansion at infinity, cut at x^-order).
    """
    g._uni()
    ring = g.ring
    fld = {k: ring.coerce(c) for k, c in fld.items()}
    fld = {k: c for k, c in fld.items() if c.terms}
    if not fld:
        return g
    nonnil = [k for k, c in fld.items() if not c.is_nilpotent()]
    if 0 in nonnil:
        raise WindowTooSmall("a non-nilpotent scaling term has no rational exponential")
    if any(k < 0 for k in nonnil) and any(k > 0 for k in nonnil):
        raise WindowTooSmall("field pushes degrees both ways; expansion does not terminate")
    if nonnil and nonnil[0] < 0 or (not nonnil and not g.is_exact() and max(fld) < 0):
        r = exp_vector_field(_reflect_field(fld), g.reflect(), None if order is None else order)
        return r.reflect()
    if not g.is_exact() and not nonnil:
        # D^(max_degree+1) = 0 exactly, windows are tracked by the arithmetic
        total = term = g
        for m in range(1, ring.max_degree + 1):
            term = _apply_field(fld, term).scale(Fraction(1, m))
            total = total + term
        return total
    if not g.is_exact() and min(fld) < 1:
        if set(fld) == {0}:
            return g.substitute_scale(fld[0].exp())
        raise WindowTooSmall("mixed-direction field acting on a windowed series")
    if nonnil and order is None:
        hi = g.window[0][1]
        if hi is None:
            raise WindowTooSmall("order needed for a non-terminating exponential")
        order = hi
    cut = order if nonnil else None
    try:
        total = g if cut is None else g.truncate_above(cut)
        term = total
        m = 0
        limit = ring.max_degree + 2 + (0 if cut is None else cut - (g.min_exp() or 0) + 2)
        while True:
            m += 1
            term = _apply_field(fld, term).scale(Fraction(1, m))
            if cut is not None:
                term = term.truncate_above(cut)
            if not term.coeffs:
                total = total + term
                break
            total = total + term
            if m > limit + 1000:
                raise WindowTooSmall("exponential failed to terminate")
    except EmptyResultWindow as exc:
        raise WindowTooSmall(f"input window too small: {exc}") from None
    return total


def exp_field_series(V: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """exp(V(x) d/dx) g for a field V given as a (possibly windowed) series
    with nilpotent coefficients."""
    from .series import multiply

    if any(not c.is_nilpotent() for c in V.coeffs.values()):
        raise WindowTooSmall("field series must have nilpotent coefficients")
    total = term = g
    for m in range(1, g.ring.max_degree + 1):
        term = multiply(V, term.derivative()).scale(Fraction(1, m))
        total = total + term
    return total


def apply_exp_derivation(A, g: TruncatedSeries, order=None) -> TruncatedSeries:
    """exp(sum_k A_k x^{k+1} d/dx) g."""
    ring = g.ring
    return exp_vector_field({j + 1: ring.coerce(a) for j, a in enumerate(A)}, g, order)


def phi(ring, A, order=None, var="w") -> TruncatedSeries:
    """phi_A(w) = exp(sum_j A_j w^{j+1} d/dw) w."""
    x = TruncatedSeries(ring, (var,), None, {(1,): 1})
    return apply_exp_derivation(A, x, order)


def psi(ring, X, order=None, var="w") -> TruncatedSeries:
    """exp(sum_j X_j w^{-j+1} d/dw) w, a map fixing infinity."""
    x = TruncatedSeries(ring, (var,), None, {(1,): 1})
    return exp_vector_field({-(j + 1): ring.coerce(c) for j, c in enumerate(X)}, x, order)


def map_from_coords(c: LocalCoordinate, order=None, var="w") -> TruncatedSeries:
    """Series of the coordinate map; exact whenever the expansion terminates."""
    f = phi(c.ring, c.A, order, var).scale(c.a0)
    if c.vanishing_at == "infinity":
        return f.reflect()
    return f


def coords_from_coordinate_map(f: TruncatedSeries, vanishing_at="zero", order=None) -> LocalCoordinate:
    """Recover (a0, A_1..A_M) from a coordinate map known through w^{M+1}."""
    f._uni()
    if vanishing_at == "infinity":
        c = coords_from_coordinate_map(f.reflect(), "zero", order)
        return LocalCoordinate(c.a0, c.A, "infinity", c.exact)
    lo, hi = f.window[0]
    if lo is not None:
        raise NotACoordinateMap("coordinate map must be known near zero")
    if any(e[0] < 1 for e in f.coeffs):
        raise NotACoordinateMap("coordinate map has a constant or polar term")
    a0 = f.coeffs.get((1,))
    if a0 is None or not a0.is_invertible():
        raise NotACoordinateMap(f"leading coefficient {a0} is not invertible")
    top = f.max_exp() if hi is None else hi
    M = top - 1 if order is None else order
    if hi is not None and M > hi - 1:
        M = hi - 1
    if M < 0:
        raise WindowTooSmall("coordinate map known only through its constant term")
    target = f.scale(a0.inverse())
    ring = f.ring
    A = []
    for j in range(1, M + 1):
        cur = apply_exp_derivation(A + [ring.zero()], TruncatedSeries(ring, f.variables, None, {(1,): 1}), j + 1)
        A.append(target.coeffs.get((j + 1,), ring.zero()) - cur.coeffs.get((j + 1,), ring.zero()))
    return LocalCoordinate(a0, tuple(A), "zero", False)


# ---------------------------------------------------------------------------
# PBW algebra


@cache
def _normal(word: tuple) -> tuple:
    """PBW normal form of L_{w1} ... L_{wr} as ((indices, d_power), rational) pairs."""
    for i in range(len(word) - 1):
        a, b = word[i], word[i + 1]
        if a > b:
            pre, post = word[:i], word[i + 2:]
            out = {}
            for key, c in _normal(pre + (b, a) + post):
                out[key] = out.get(key, 0) + c
            for key, c in _normal(pre + (a + b,) + post):
                out[key] = out.get(key, 0) + c * (a - b)
            if a == -b and a ** 3 - a:
                z = Fraction(a ** 3 - a, 12)
                for (w, dp), c in _normal(pre + post):
                    out[(w, dp + 1)] = out.get((w, dp + 1), 0) + c * z
            return tuple(sorted((k, v) for k, v in out.items() if v))
    return (((word, 0), Fraction(1)),)


def word_weight(word) -> int:
    return -sum(word[0])


def _band(N):
    if N is None:
        return (None, None)
    if isinstance(N, int):
        return (-N, N)
    return tuple(N)


def _in_band(w, band):
    lo, hi = band
    return (lo is None or w >= lo) and (hi is None or w <= hi)


class VirasoroElement:
    """Element of U(Vir) in PBW normal form: words (indices ascending, d power)."""

    __slots__ = ("band", "band_limited", "ring", "terms")

    def __init__(self, ring: ParameterRing, terms=None, weight_bound=None, band_limited=False):
        self.ring = ring
        self.band = _band(weight_bound)
        clean = {}
        dropped = band_limited
        for (idx, dp), c in (terms or {}).items():
            idx = tuple(idx)
            c = ring.coerce(c)
            if not c.terms:
                continue
            for key, q in _normal(idx):
                if not _in_band(-sum(key[0]), self.band):
                    dropped = True
                    continue
                key = (key[0], key[1] + dp)
                v = c * q
                s = clean[key] + v if key in clean else v
                if s.terms:
                    clean[key] = s
                else:
                    clean.pop(key, None)
        self.terms = clean
        self.band_limited = dropped

    @classmethod
    def _make(cls, ring, terms, band, limited):
        obj = cls.__new__(cls)
        obj.ring = ring
        obj.terms = terms
        obj.band = band
        obj.band_limited = limited
        return obj

    # -- constructors
    @classmethod
    def one(cls, ring, weight_bound=None):
        return cls(ring, {((), 0): 1}, weight_bound)

    @classmethod
    def generator(cls, ring, k: int, weight_bound=None, coeff=1):
        return cls(ring, {((k,), 0): coeff}, weight_bound)

    @classmethod
    def central(cls, ring, weight_bound=None, coeff=1):
        return cls(ring, {((), 1): coeff}, weight_bound)

    @classmethod
    def linear(cls, ring, coeffs: dict, weight_bound=None, d=0):
        """sum_k coeffs[k] L_k + d * central."""
        t = {((k,), 0): c for k, c in coeffs.items()}
        if d:
            t[((), 1)] = d
        return cls(ring, t, weight_bound)

    def _like(self, terms, limited=False):
        return VirasoroElement._make(self.ring, terms, self.band, self.band_limited or limited)

    # -- arithmetic
    def __add__(self, other):
        if not isinstance(other, VirasoroElement):
            other = VirasoroElement(self.ring, {((), 0): other}, self.band)
        t = dict(self.terms)
        for k, c in other.terms.items():
            s = t[k] + c if k in t else c
            if s.terms:
                t[k] = s
            else:
                t.pop(k, None)
        return self._like(t, other.band_limited)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = self.ring.coerce(c)
        t = {}
        for k, v in self.terms.items():
            p = v * c
            if p.terms:
                t[k] = p
        return self._like(t)

    def __mul__(self, other):
        if isinstance(other, VirasoroElement):
            return uea_multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, VirasoroElement):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        raise TypeError("VirasoroElement is not hashable")

    def coefficient(self, indices=(), d=0) -> Coefficient:
        return self.terms.get((tuple(indices), d), self.ring.zero())

    def words(self):
        return sorted(self.terms)

    def is_zero(self):
        return not self.terms

    def restrict_weight(self, lo=None, hi=None) -> VirasoroElement:
        t = {k: c for k, c in self.terms.items() if _in_band(-sum(k[0]), (lo, hi))}
        return self._like(t)

    def exp(self, limit=None) -> VirasoroElement:
        """exp of an element whose powers eventually vanish (nilpotent or band-limited)."""
        total = VirasoroElement.one(self.ring, self.band)
        term = total
        cap = limit or (self.ring.max_degree + 2 * (self.band[1] or 0) + 2 * -(self.band[0] or 0) + 4)
        for m in range(1, cap + 1):
            term = uea_multiply(term, self).scale(Fraction(1, m))
            if term.is_zero():
                return total + term
            total = total + term
        raise ValueError("exponential did not terminate within the band")

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (idx, dp), c in sorted(self.terms.items()):
            w = "".join(f"L({k})" for k in idx) + ("d" if dp == 1 else f"d^{dp}" if dp else "")
            parts.append(f"({c}){w or '1'}")
        return " + ".join(parts)


def uea_multiply(u: VirasoroElement, v: VirasoroElement) -> VirasoroElement:
    if u.ring != v.ring:
        raise ValueError("elements over different rings")
    band = u.band if u.band == v.band else _meet(u.band, v.band)
    out = {}
    dropped = u.band_limited or v.band_limited
    ring = u.ring
    for (w1, d1), c1 in u.terms.items():
        for (w2, d2), c2 in v.terms.items():
            c = c1 * c2
            if not c.terms:
                continue
            wt = -sum(w1) - sum(w2)
            if not _in_band(wt, band):
                dropped = True
                continue
            for (w, dp), q in _normal(w1 + w2):
                key = (w, dp + d1 + d2)
                p = c * q
                s = out[key] + p if key in out else p
                if s.terms:
                    out[key] = s
                else:
                    out.pop(key, None)
    return VirasoroElement._make(ring, out, band, dropped)


def _meet(a, b):
    lo = a[0] if b[0] is None else b[0] if a[0] is None else max(a[0], b[0])
    hi = a[1] if b[1] is None else b[1] if a[1] is None else min(a[1], b[1])
    return (lo, hi)


def conjugate_scaling(a, u: VirasoroElement) -> VirasoroElement:
    """a^{L0} u a^{-L0}: every L_k picks up a^{-k}."""
    a = u.ring.coerce(a)
    cache = {}
    t = {}
    for (w, dp), c in u.terms.items():
        s = -sum(w)
        if s not in cache:
            cache[s] = a ** s
        p = c * cache[s]
        if p.terms:
            t[(w, dp)] = p
    return u._like(t)


def bracket(u: VirasoroElement, v: VirasoroElement) -> VirasoroElement:
    return uea_multiply(u, v) - uea_multiply(v, u)


def compare_elements(u: VirasoroElement, v: VirasoroElement, lo=None, hi=None):
    """None when equal on the weight range, else a witness dict."""
    for key in sorted(set(u.terms) | set(v.terms)):
        if not _in_band(-sum(key[0]), (lo, hi)):
            continue
        a = u.terms.get(key, u.ring.zero())
        b = v.terms.get(key, v.ring.zero())
        if a != b:
            return {"word": _word_str(key), "left": str(a), "right": str(b)}
    return None


def _word_str(key):
    idx, dp = key
    s = "".join(f"L({k})" for k in idx)
    if dp:
        s += "d" if dp == 1 else f"d^{dp}"
    return s or "1"


# group-like scaling factors a^{L0} are carried as pairs (u, a) meaning u a^{L0}


@dataclass
class Scaled:
    u: VirasoroElement
    s: Coefficient

    def __mul__(self, other: Scaled) -> Scaled:
        return Scaled(uea_multiply(self.u, conjugate_scaling(self.s, other.u)), self.s * other.s)

    @classmethod
    def plain(cls, u: VirasoroElement) -> Scaled:
        return cls(u, u.ring.one())

    @classmethod
    def scaling(cls, ring, a, weight_bound=None) -> Scaled:
        return cls(VirasoroElement.one(ring, weight_bound), ring.coerce(a))


def exp_linear(ring, coeffs: dict, weight_bound=None, d=0) -> VirasoroElement:
    return VirasoroElement.linear(ring, coeffs, weight_bound, d).exp()


# ---------------------------------------------------------------------------
# BCH factorization


@dataclass
class BchFactorization:
    psi_minus: list
    psi0: Coefficient
    psi_plus: list
    gamma: Coefficient
    scale: Coefficient
    weight_bound: int
    gamma_product_only: bool = True
    notes: list = field(default_factory=list)

    def psi(self, k: int) -> Coefficient:
        if k == 0:
            return self.psi0
        seq = self.psi_plus if k > 0 else self.psi_minus
        j = abs(k)
        return seq[j - 1] if j <= len(seq) else self.psi0.ring.zero()


def _ring_for(ring: ParameterRing, D) -> ParameterRing:
    if D is None or D == ring.max_degree:
        return ring
    return ParameterRing(ring.graded, ring.units, D)


def bch_lhs(A, B, alpha0, beta0, N) -> Scaled:
    ring = alpha0.ring
    ea = exp_linear(ring, {j + 1: -a for j, a in enumerate(A)}, N)
    eb = exp_linear(ring, {-(j + 1): -b for j, b in enumerate(B)}, N)
    return (
        Scaled.plain(ea)
        * Scaled.scaling(ring, alpha0.inverse(), N)
        * Scaled.scaling(ring, beta0.inverse(), N)
        * Scaled.plain(eb)
    )


def bch_rhs(fac: BchFactorization, alpha0, beta0, N) -> Scaled:
    ring = alpha0.ring
    em = exp_linear(ring, {-(j + 1): -p for j, p in enumerate(fac.psi_minus)}, N)
    e0 = exp_linear(ring, {0: fac.psi0}, N)
    ep = exp_linear(ring, {j + 1: -p for j, p in enumerate(fac.psi_plus)}, N)
    eg = exp_linear(ring, {}, N, d=fac.gamma)
    return (
        Scaled.plain(em)
        * Scaled.scaling(ring, (alpha0 * beta0).inverse(), N)
        * Scaled.plain(e0)
        * Scaled.plain(ep)
        * Scaled.plain(eg)
    )


def bch_factorize(A, B, alpha0, beta0, weight_bound=None, degree_bound=None) -> BchFactorization:
    """Solve exp(-sum A_j L_j) a0^{-L0} b0^{-L0} exp(-sum B_j L_-j)
         = exp(-sum Psi_-j L_-j) (a0 b0)^{-L0} exp(Psi_0 L0) exp(-sum Psi_j L_j) exp(Gamma d)
    order by order in the graded parameters."""
    ring = _ring_for(alpha0.ring, degree_bound)
    alpha0, beta0 = ring.coerce(alpha0), ring.coerce(beta0)
    A = [ring.coerce(a) for a in A]
    B = [ring.coerce(b) for b in B]
    D = ring.max_degree
    M = max([j + 1 for j, a in enumerate(A) if a.terms] + [j + 1 for j, b in enumerate(B) if b.terms] + [1])
    N = max(weight_bound or 0, D * M)
    s = alpha0 * beta0
    sinv = s.inverse()
    # reduced problem: s^{-L0} moved to the right on both sides
    Bp = [sinv ** (j + 1) * b for j, b in enumerate(B)]
    lhs = uea_multiply(
        exp_linear(ring, {j + 1: -a for j, a in enumerate(A)}, N),
        exp_linear(ring, {-(j + 1): -b for j, b in enumerate(Bp)}, N),
    )
    zero = ring.zero()
    pm = [zero] * N
    pp = [zero] * N
    p0 = zero
    g = zero
    for deg in range(1, D + 1):
        rhs = _reduced_rhs(ring, pm, p0, pp, g, N)
        diff = lhs - rhs
        for (w, dp), c in diff.terms.items():
            part = c.degree_part(deg)
            if not part.terms:
                continue
            if dp == 0 and len(w) == 1:
                k = w[0]
                if k < 0:
                    pm[-k - 1] = pm[-k - 1] - part
                elif k == 0:
                    p0 = p0 + part
                else:
                    pp[k - 1] = pp[k - 1] - part
            elif dp == 1 and not w:
                g = g + part
    rhs = _reduced_rhs(ring, pm, p0, pp, g, N)
    wit = compare_elements(lhs, rhs)
    if wit is not None:
        raise UnderdeterminedAtDegree(f"BCH residual does not vanish: {wit}")
    psi_plus = [sinv ** (j + 1) * p for j, p in enumerate(pp)]
    fac = BchFactorization(
        psi_minus=_trim(pm), psi0=p0, psi_plus=_trim(psi_plus), gamma=g, scale=s, weight_bound=N
    )
    fac.gamma_product_only = _depends_on_product(g, alpha0, beta0)
    if not fac.gamma_product_only:
        fac.notes.append("Gamma depends on alpha0 and beta0 separately")
    return fac


def _trim(seq):
    seq = list(seq)
    while seq and not seq[-1].terms:
        seq.pop()
    return seq


def _depends_on_product(g: Coefficient, alpha0, beta0) -> bool:
    """True when every monomial of g carries equal powers of alpha0 and beta0."""
    ia = _single_unit(alpha0)
    ib = _single_unit(beta0)
    if ia is None or ib is None:
        return True
    return all(e[ia[0]] * ib[1] == e[ib[0]] * ia[1] for e in g.terms)


def _single_unit(c: Coefficient):
    """(index, power) when c is a single unit-parameter monomial."""
    if len(c.terms) != 1:
        return None
    (e, q), = c.terms.items()
    nz = [(i, x) for i, x in enumerate(e) if x]
    if len(nz) != 1 or q != 1:
        return None
    return nz[0]


def _reduced_rhs(ring, pm, p0, pp, g, N):
    em = exp_linear(ring, {-(j + 1): -p for j, p in enumerate(pm)}, N)
    e0 = exp_linear(ring, {0: p0}, N)
    ep = exp_linear(ring, {j + 1: -p for j, p in enumerate(pp)}, N)
    out = uea_multiply(uea_multiply(em, e0), ep)
    if g.terms:
        out = uea_multiply(out, exp_linear(ring, {}, N, d=g))
    return out


def verify_bch(fac: BchFactorization, A, B, alpha0, beta0):
    """Witness of the first mismatch between the two sides, or None."""
    ring = _ring_for(alpha0.ring, None)
    N = fac.weight_bound
    left = bch_lhs([ring.coerce(a) for a in A], [ring.coerce(b) for b in B], alpha0, beta0, N)
    right = bch_rhs(fac, alpha0, beta0, N)
    if left.s != right.s:
        return {"word": "scaling", "left": str(left.s), "right": str(right.s)}
    return compare_elements(left.u, right.u)
