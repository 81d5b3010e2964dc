"""Exact truncated formal Laurent series over a polynomial coefficient ring.

Coefficients live in Q[graded parameters, unit parameters^{+-1}] truncated at a
total degree in the graded (nilpotent) parameters.  A series carries an
exponent window: coefficients inside the window are known exactly, outside it
they are unknown.  An unbounded side of a window means "known, and zero beyond
the stored terms", so a fully unbounded window is an exact Laurent polynomial.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from math import factorial

from .errors import (
    EmptyResultWindow,
    IllDefinedComposition,
    LimitUndetermined,
    NotInvertible,
    WindowExcludesResidue,
)

_add = operator.add


def binom(n: int, k: int) -> Fraction:
    """Generalized binomial coefficient C(n, k) for integer n and k >= 0."""
    if k < 0:
        return Fraction(0)
    num = 1
    for i in range(k):
        num *= n - i
    return Fraction(num, factorial(k))


# ---------------------------------------------------------------------------
# coefficient ring


class ParameterRing:
    """Parameters split into graded ones (nilpotent, counted by max_degree) and
    unit ones (invertible, Laurent exponents allowed, not counted)."""

    __slots__ = ("_index", "_key", "graded", "max_degree", "n_graded", "names", "units")

    def __init__(self, graded=(), units=(), max_degree: int = 3):
        graded = tuple(graded)
        units = tuple(units)
        names = graded + units
        if len(set(names)) != len(names):
            raise ValueError(f"parameter names must be distinct: {names}")
        if max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        self.graded = graded
        self.units = units
        self.names = names
        self.max_degree = int(max_degree)
        self.n_graded = len(graded)
        self._index = {n: i for i, n in enumerate(names)}
        self._key = (graded, units, self.max_degree)

    def __eq__(self, other):
        return isinstance(other, ParameterRing) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"ParameterRing(graded={self.graded}, units={self.units}, max_degree={self.max_degree})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown parameter {name!r}") from None

    def degree(self, exps) -> int:
        return sum(exps[: self.n_graded])

    @property
    def zero_exps(self):
        return (0,) * len(self.names)

    def zero(self) -> Coefficient:
        return Coefficient._make(self, {})

    def one(self) -> Coefficient:
        return Coefficient._make(self, {self.zero_exps: Fraction(1)})

    def const(self, q) -> Coefficient:
        q = Fraction(q)
        return Coefficient._make(self, {self.zero_exps: q} if q else {})

    def param(self, name: str, power: int = 1) -> Coefficient:
        i = self.index(name)
        if power < 0 and i < self.n_graded:
            raise NotInvertible(f"graded parameter {name} has no inverse")
        e = [0] * len(self.names)
        e[i] = power
        return Coefficient(self, {tuple(e): Fraction(1)})

    def __call__(self, x) -> Coefficient:
        return self.coerce(x)

    def coerce(self, x) -> Coefficient:
        if isinstance(x, Coefficient):
            if x.ring is self or x.ring == self:
                return x
            return x.embed(self)
        if isinstance(x, str):
            return self.param(x)
        return self.const(x)

    def extend(self, graded=(), units=(), max_degree=None) -> ParameterRing:
        return ParameterRing(
            self.graded + tuple(g for g in graded if g not in self.graded),
            self.units + tuple(u for u in units if u not in self.units),
            self.max_degree if max_degree is None else max_degree,
        )


class Coefficient:
    """Immutable polynomial in the ring's parameters with exact rational values."""

    __slots__ = ("_h", "ring", "terms")

    def __init__(self, ring: ParameterRing, terms=None):
        clean = {}
        if terms:
            nv = len(ring.names)
            for e, v in terms.items():
                e = tuple(e)
                if len(e) != nv:
                    raise ValueError("exponent vector length mismatch")
                if any(x < 0 for x in e[: ring.n_graded]):
                    raise ValueError("graded parameters need nonnegative exponents")
                if ring.degree(e) > ring.max_degree:
                    continue
                v = Fraction(v)
                if v:
                    clean[e] = clean.get(e, 0) + v
            clean = {e: v for e, v in clean.items() if v}
        self.ring = ring
        self.terms = clean
        self._h = None

    @classmethod
    def _make(cls, ring, terms):
        obj = cls.__new__(cls)
        obj.ring = ring
        obj.terms = terms
        obj._h = None
        return obj

    # -- coercion
    def _co(self, other):
        if isinstance(other, Coefficient):
            if other.ring is self.ring or other.ring == self.ring:
                return other
            raise ValueError("coefficients from different rings")
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other)
        return None

    # -- arithmetic
    def __add__(self, other):
        o = self._co(other)
        if o is None:
            return NotImplemented
        if not o.terms:
            return self
        if not self.terms:
            return o
        t = dict(self.terms)
        for e, v in o.terms.items():
            s = t.get(e, 0) + v
            if s:
                t[e] = s
            else:
                t.pop(e, None)
        return Coefficient._make(self.ring, t)

    __radd__ = __add__

    def __neg__(self):
        return Coefficient._make(self.ring, {e: -v for e, v in self.terms.items()})

    def __sub__(self, other):
        o = self._co(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._co(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return Coefficient._make(self.ring, {})
            return Coefficient._make(self.ring, {e: v * other for e, v in self.terms.items()})
        o = self._co(other)
        if o is None:
            return NotImplemented
        if not self.terms or not o.terms:
            return Coefficient._make(self.ring, {})
        ring = self.ring
        # constant factors are common: scale instead of convolving
        if len(o.terms) == 1 or len(self.terms) == 1:
            small, big = (o, self) if len(o.terms) == 1 else (self, o)
            (e0, c), = small.terms.items()
            if not any(e0):
                return Coefficient._make(ring, {e: v * c for e, v in big.terms.items()})
        ng = ring.n_graded
        md = ring.max_degree
        a = [(e, v, sum(e[:ng])) for e, v in self.terms.items()]
        b = [(e, v, sum(e[:ng])) for e, v in o.terms.items()]
        t = {}
        for e1, v1, d1 in a:
            for e2, v2, d2 in b:
                if d1 + d2 > md:
                    continue
                e = tuple(map(_add, e1, e2))
                t[e] = t.get(e, 0) + v1 * v2
        return Coefficient._make(ring, {e: v for e, v in t.items() if v})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        o = self._co(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._co(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = self.ring.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- comparison
    def __eq__(self, other):
        if isinstance(other, Coefficient):
            return self.ring == other.ring and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            if not other:
                return not self.terms
            return self.terms == {self.ring.zero_exps: other}
        return NotImplemented

    def __hash__(self):
        if self._h is None:
            self._h = hash(frozenset(self.terms.items()))
        return self._h

    def __bool__(self):
        return bool(self.terms)

    # -- structure
    def is_zero(self) -> bool:
        return not self.terms

    def is_scalar(self) -> bool:
        z = self.ring.zero_exps
        return all(e == z for e in self.terms)

    def scalar(self) -> Fraction:
        if not self.is_scalar():
            raise ValueError(f"{self} is not a rational constant")
        return self.terms.get(self.ring.zero_exps, Fraction(0))

    def degree_part(self, d: int) -> Coefficient:
        ng = self.ring.n_graded
        return Coefficient._make(self.ring, {e: v for e, v in self.terms.items() if sum(e[:ng]) == d})

    def truncate_degree(self, d: int) -> Coefficient:
        ng = self.ring.n_graded
        return Coefficient._make(self.ring, {e: v for e, v in self.terms.items() if sum(e[:ng]) <= d})

    def low_degree(self):
        """Lowest graded degree present, or None for zero."""
        if not self.terms:
            return None
        ng = self.ring.n_graded
        return min(sum(e[:ng]) for e in self.terms)

    def is_nilpotent(self) -> bool:
        return not self.degree_part(0).terms

    def is_invertible(self) -> bool:
        return len(self.degree_part(0).terms) == 1

    def inverse(self) -> Coefficient:
        ring = self.ring
        head = self.degree_part(0)
        if len(head.terms) != 1:
            raise NotInvertible(f"{self} is not invertible (degree-0 part is not a unit monomial)")
        (e0, q0), = head.terms.items()
        if any(e0[: ring.n_graded]):
            raise NotInvertible(f"{self} is not invertible")
        uinv = Coefficient._make(ring, {tuple(-x for x in e0): 1 / q0})
        nil = (self - head) * uinv
        if not nil.terms:
            return uinv
        total = ring.one()
        power = ring.one()
        for _ in range(ring.max_degree):
            power = power * (-nil)
            if not power.terms:
                break
            total = total + power
        return uinv * total

    def exp(self) -> Coefficient:
        if not self.is_nilpotent():
            raise ValueError(f"exp needs a nilpotent argument, got {self}")
        total = self.ring.one()
        power = self.ring.one()
        for k in range(1, self.ring.max_degree + 1):
            power = power * self * Fraction(1, k)
            if not power.terms:
                break
            total = total + power
        return total

    def log(self) -> Coefficient:
        nil = self - 1
        if not nil.is_nilpotent():
            raise ValueError(f"log needs an argument of the form 1 + nilpotent, got {self}")
        total = self.ring.zero()
        power = self.ring.one()
        for k in range(1, self.ring.max_degree + 1):
            power = power * nil
            if not power.terms:
                break
            total = total + power * Fraction((-1) ** (k + 1), k)
        return total

    def diff(self, name: str) -> Coefficient:
        i = self.ring.index(name)
        t = {}
        for e, v in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                t[tuple(ne)] = v * e[i]
        return Coefficient._make(self.ring, t)

    def subs(self, values: dict) -> Coefficient:
        """Substitute parameters by coefficients (or rationals)."""
        ring = self.ring
        idx = {ring.index(k): ring.coerce(v) for k, v in values.items()}
        out = ring.zero()
        cache = {}
        for e, q in self.terms.items():
            rest = list(e)
            term = ring.const(q)
            for i, val in idx.items():
                p = e[i]
                if p:
                    key = (i, p)
                    if key not in cache:
                        cache[key] = val ** p
                    term = term * cache[key]
                    rest[i] = 0
            if any(rest):
                term = term * Coefficient._make(ring, {tuple(rest): Fraction(1)})
            out = out + term
        return out

    def coefficient(self, **exps) -> Fraction:
        e = [0] * len(self.ring.names)
        for k, v in exps.items():
            e[self.ring.index(k)] = v
        return self.terms.get(tuple(e), Fraction(0))

    def embed(self, ring: ParameterRing) -> Coefficient:
        """Re-express this coefficient in a ring containing all its parameters."""
        mapping = [ring.index(n) for n in self.ring.names]
        t = {}
        for e, v in self.terms.items():
            ne = [0] * len(ring.names)
            for i, x in enumerate(e):
                if x:
                    ne[mapping[i]] = x
            t[tuple(ne)] = v
        return Coefficient(ring, t)

    def sort_key(self):
        return sorted((self.ring.degree(e), e, v) for e, v in self.terms.items())

    def __str__(self):
        if not self.terms:
            return "0"
        names = self.ring.names
        parts = []
        for e, v in sorted(self.terms.items(), key=lambda t: (self.ring.degree(t[0]), t[0])):
            mono = "*".join(
                n if x == 1 else f"{n}^{x}" for n, x in zip(names, e) if x
            )
            if not mono:
                parts.append(str(v))
            elif v == 1:
                parts.append(mono)
            elif v == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{v}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


def as_coefficient(ring: ParameterRing, x) -> Coefficient:
    return ring.coerce(x)


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class ExponentWindow:
    """Per-variable inclusive exponent ranges; None marks an unbounded side."""

    bounds: tuple

    def __post_init__(self):
        b = tuple((lo, hi) for lo, hi in self.bounds)
        for lo, hi in b:
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"empty window range ({lo}, {hi})")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def full(cls, n: int) -> ExponentWindow:
        return cls(((None, None),) * n)

    @classmethod
    def box(cls, radius: int, n: int) -> ExponentWindow:
        return cls(((-radius, radius),) * n)

    def __len__(self):
        return len(self.bounds)

    def __getitem__(self, i):
        return self.bounds[i]

    def contains(self, e) -> bool:
        for x, (lo, hi) in zip(e, self.bounds):
            if lo is not None and x < lo:
                return False
            if hi is not None and x > hi:
                return False
        return True

    def intersect(self, other: ExponentWindow):
        out = []
        for (a, b), (c, d) in zip(self.bounds, other.bounds):
            lo = a if c is None else c if a is None else max(a, c)
            hi = b if d is None else d if b is None else min(b, d)
            if lo is not None and hi is not None and lo > hi:
                return None
            out.append((lo, hi))
        return ExponentWindow(tuple(out))

    def is_exact(self) -> bool:
        return all(lo is None and hi is None for lo, hi in self.bounds)

    def restricted(self):
        return [i for i, (lo, hi) in enumerate(self.bounds) if lo is not None or hi is not None]

    def points(self):
        ranges = []
        for lo, hi in self.bounds:
            if lo is None or hi is None:
                raise ValueError("cannot enumerate an unbounded window")
            ranges.append(range(lo, hi + 1))
        return iproduct(*ranges)

    def __str__(self):
        def s(x, inf):
            return inf if x is None else str(x)

        return "x".join(f"[{s(lo, '-inf')},{s(hi, 'inf')}]" for lo, hi in self.bounds)


def _window(w, n):
    if w is None:
        return ExponentWindow.full(n)
    if isinstance(w, ExponentWindow):
        return w
    return ExponentWindow(tuple(w))


# ---------------------------------------------------------------------------
# series


class TruncatedSeries:
    """Formal Laurent series in named commuting variables, known on a window."""

    __slots__ = ("coeffs", "ring", "variables", "window")

    def __init__(self, ring, variables, window=None, coeffs=None, clip: bool = False):
        variables = tuple(variables)
        window = _window(window, len(variables))
        if len(window) != len(variables):
            raise ValueError("window and variable list differ in length")
        clean = {}
        for e, c in (coeffs or {}).items():
            e = (e,) if isinstance(e, int) else tuple(e)
            if len(e) != len(variables):
                raise ValueError("exponent vector length mismatch")
            if not window.contains(e):
                if clip:
                    continue
                raise ValueError(f"exponent {e} outside window {window}")
            c = ring.coerce(c)
            if c.terms:
                clean[e] = clean[e] + c if e in clean else c
        self.ring = ring
        self.variables = variables
        self.window = window
        self.coeffs = {e: c for e, c in clean.items() if c.terms}

    @classmethod
    def _make(cls, ring, variables, window, coeffs):
        obj = cls.__new__(cls)
        obj.ring = ring
        obj.variables = variables
        obj.window = window
        obj.coeffs = coeffs
        return obj

    # -- constructors
    @classmethod
    def univariate(cls, ring, var, terms, lo=None, hi=None, clip=False):
        return cls(ring, (var,), ((lo, hi),), {(k,): v for k, v in terms.items()}, clip=clip)

    @classmethod
    def monomial(cls, ring, variables, exps, coeff=1):
        return cls(ring, variables, None, {tuple(exps): coeff})

    @classmethod
    def zero(cls, ring, variables, window=None):
        return cls(ring, variables, window, {})

    # -- basic queries
    @property
    def nvars(self):
        return len(self.variables)

    def coeff(self, *e) -> Coefficient:
        if len(e) == 1 and isinstance(e[0], tuple):
            e = e[0]
        if not self.window.contains(e):
            raise KeyError(f"exponent {e} outside window {self.window}")
        return self.coeffs.get(tuple(e), self.ring.zero())

    def __getitem__(self, e):
        if isinstance(e, int):
            e = (e,)
        return self.coeff(e)

    def is_exact(self) -> bool:
        return self.window.is_exact()

    def support(self):
        return sorted(self.coeffs)

    def _same_space(self, other):
        if not isinstance(other, TruncatedSeries):
            raise TypeError("expected a TruncatedSeries")
        if other.variables != self.variables:
            raise ValueError(f"variable lists differ: {self.variables} vs {other.variables}")
        if other.ring != self.ring:
            raise ValueError("series over different coefficient rings")

    def restrict(self, window) -> TruncatedSeries:
        window = _window(window, self.nvars)
        w = self.window.intersect(window)
        if w is None:
            raise EmptyResultWindow(f"{self.window} and {window} do not meet")
        return TruncatedSeries._make(
            self.ring, self.variables, w, {e: c for e, c in self.coeffs.items() if w.contains(e)}
        )

    def with_window(self, window) -> TruncatedSeries:
        """Declare a window; stored terms outside it are dropped."""
        window = _window(window, self.nvars)
        return TruncatedSeries._make(
            self.ring, self.variables, window, {e: c for e, c in self.coeffs.items() if window.contains(e)}
        )

    # -- linear structure
    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries(self.ring, self.variables, None, {(0,) * self.nvars: other})
        self._same_space(other)
        w = self.window.intersect(other.window)
        if w is None:
            raise EmptyResultWindow("windows of summands do not meet")
        out = {e: c for e, c in self.coeffs.items() if w.contains(e)}
        for e, c in other.coeffs.items():
            if not w.contains(e):
                continue
            s = out[e] + c if e in out else c
            if s.terms:
                out[e] = s
            else:
                out.pop(e, None)
        return TruncatedSeries._make(self.ring, self.variables, w, out)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries._make(self.ring, self.variables, self.window, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self + (-self.ring.coerce(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> TruncatedSeries:
        c = self.ring.coerce(c)
        out = {}
        for e, v in self.coeffs.items():
            p = v * c
            if p.terms:
                out[e] = p
        return TruncatedSeries._make(self.ring, self.variables, self.window, out)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        return power(self, k)

    def map_coeffs(self, fn) -> TruncatedSeries:
        out = {}
        for e, c in self.coeffs.items():
            v = fn(c)
            if v.terms:
                out[e] = v
        return TruncatedSeries._make(self.ring, self.variables, self.window, out)

    # -- equality with window semantics
    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return compare(self, other) is None

    def __hash__(self):
        raise TypeError("TruncatedSeries is not hashable")

    def __repr__(self):
        return f"TruncatedSeries({self.variables}, window={self.window}, {self.to_str()})"

    def to_str(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for e in sorted(self.coeffs):
            mono = "*".join(
                v if x == 1 else f"{v}^{x}" for v, x in zip(self.variables, e) if x
            )
            c = str(self.coeffs[e])
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    # -- univariate helpers
    def _uni(self):
        if self.nvars != 1:
            raise ValueError("operation needs a univariate series")
        return self.window.bounds[0]

    def min_exp(self):
        return min(e[0] for e in self.coeffs) if self.coeffs else None

    def max_exp(self):
        return max(e[0] for e in self.coeffs) if self.coeffs else None

    def derivative(self, var=None) -> TruncatedSeries:
        i = 0 if var is None else self.variables.index(var)
        lo, hi = self.window.bounds[i]
        nb = list(self.window.bounds)
        # d/dx of the x^0 term vanishes, so a lower edge at 0 is not lost
        nb[i] = (None if lo is None else lo - 1, None if hi is None else hi - 1)
        if lo is not None and hi is not None and lo - 1 > hi - 1:
            raise EmptyResultWindow("derivative window empty")
        out = {}
        for e, c in self.coeffs.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * e[i]
        return TruncatedSeries._make(self.ring, self.variables, ExponentWindow(tuple(nb)), out)

    def substitute_scale(self, c, var=None) -> TruncatedSeries:
        """x -> c x for an invertible (or, for nonnegative exponents, any) c."""
        i = 0 if var is None else self.variables.index(var)
        c = self.ring.coerce(c)
        cache = {}
        out = {}
        for e, v in self.coeffs.items():
            p = e[i]
            if p not in cache:
                cache[p] = c ** p
            r = v * cache[p]
            if r.terms:
                out[e] = r
        return TruncatedSeries._make(self.ring, self.variables, self.window, out)

    def reflect(self, var=None) -> TruncatedSeries:
        """x -> 1/x."""
        i = 0 if var is None else self.variables.index(var)
        nb = list(self.window.bounds)
        lo, hi = nb[i]
        nb[i] = (None if hi is None else -hi, None if lo is None else -lo)
        out = {}
        for e, v in self.coeffs.items():
            ne = list(e)
            ne[i] = -ne[i]
            out[tuple(ne)] = v
        return TruncatedSeries._make(self.ring, self.variables, ExponentWindow(tuple(nb)), out)

    def shift(self, k: int, var=None) -> TruncatedSeries:
        """Multiply by x^k (exact)."""
        i = 0 if var is None else self.variables.index(var)
        nb = list(self.window.bounds)
        lo, hi = nb[i]
        nb[i] = (None if lo is None else lo + k, None if hi is None else hi + k)
        out = {}
        for e, v in self.coeffs.items():
            ne = list(e)
            ne[i] += k
            out[tuple(ne)] = v
        return TruncatedSeries._make(self.ring, self.variables, ExponentWindow(tuple(nb)), out)

    def truncate_above(self, n: int, var=None) -> TruncatedSeries:
        i = 0 if var is None else self.variables.index(var)
        nb = list(self.window.bounds)
        lo, hi = nb[i]
        hi = n if hi is None else min(hi, n)
        nb[i] = (lo, hi)
        return self.restrict(ExponentWindow(tuple(nb)))

    def truncate_below(self, n: int, var=None) -> TruncatedSeries:
        i = 0 if var is None else self.variables.index(var)
        nb = list(self.window.bounds)
        lo, hi = nb[i]
        lo = n if lo is None else max(lo, n)
        nb[i] = (lo, hi)
        return self.restrict(ExponentWindow(tuple(nb)))

    def exact(self) -> TruncatedSeries:
        """Declare the stored terms to be the whole series (caller's responsibility)."""
        return TruncatedSeries._make(self.ring, self.variables, ExponentWindow.full(self.nvars), dict(self.coeffs))

    def evaluate(self, point: dict) -> Coefficient:
        """Substitute coefficient values for every variable of an exact series."""
        if not self.is_exact():
            raise ValueError("evaluation needs an exact series")
        vals = [self.ring.coerce(point[v]) for v in self.variables]
        total = self.ring.zero()
        for e, c in self.coeffs.items():
            term = c
            for v, x in zip(vals, e):
                if x:
                    term = term * v ** x
            total = total + term
        return total


# ---------------------------------------------------------------------------
# comparison


def compare(a: TruncatedSeries, b: TruncatedSeries):
    """None when equal under window semantics, else a witness dict."""
    a._same_space(b)
    w = a.window.intersect(b.window)
    if w is None:
        bad = next(iter(sorted(a.coeffs)), None) or next(iter(sorted(b.coeffs)), None)
        if bad is None:
            return None
        return {"exponent": bad, "reason": "windows do not meet"}
    for e in sorted(set(a.coeffs) | set(b.coeffs)):
        ca = a.coeffs.get(e)
        cb = b.coeffs.get(e)
        if w.contains(e):
            if ca != cb and not (ca is None and cb is not None and not cb.terms):
                if (ca or a.ring.zero()) != (cb or a.ring.zero()):
                    return {"exponent": e, "left": str(ca or 0), "right": str(cb or 0), "window": str(w)}
        else:
            src = "left" if ca is not None else "right"
            return {"exponent": e, src: str(ca if ca is not None else cb), "reason": "nonzero outside the shared window"}
    return None


def series_equal(a, b) -> bool:
    return compare(a, b) is None


# ---------------------------------------------------------------------------
# multiplication


def multiply(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Product, on the largest box of exponents determined by the inputs."""
    a._same_space(b)
    n = a.nvars
    lo = [None] * n
    hi = [None] * n

    def tighten(v, l=None, h=None):
        if l is not None:
            lo[v] = l if lo[v] is None else max(lo[v], l)
        if h is not None:
            hi[v] = h if hi[v] is None else min(hi[v], h)

    ra = a.window.restricted()
    rb = b.window.restricted()
    if ra and rb:
        # an unknown coefficient of a meeting an unknown coefficient of b
        if len(ra) > 1 or len(rb) > 1 or ra != rb:
            raise EmptyResultWindow(f"no product exponent is determined by windows {a.window} and {b.window}")
        v = ra[0]
        la, ha = a.window[v]
        lb, hb = b.window[v]
        if ha is not None or hb is not None:
            if (ha is not None and lb is not None) or (hb is not None and la is not None):
                raise EmptyResultWindow(f"no product exponent is determined by windows {a.window} and {b.window}")
            if ha is not None and hb is not None:
                tighten(v, h=ha + hb + 1)
        if la is not None and lb is not None:
            tighten(v, l=la + lb - 1)
    # unknown coefficients must meet known zeros
    for x, y in ((a, b), (b, a)):
        if not y.coeffs:
            continue
        for v in x.window.restricted():
            lx, hx = x.window[v]
            exps = [e[v] for e in y.coeffs]
            if lx is not None:
                tighten(v, l=lx + max(exps))
            if hx is not None:
                tighten(v, h=hx + min(exps))
    for v in range(n):
        if lo[v] is not None and hi[v] is not None and lo[v] > hi[v]:
            raise EmptyResultWindow(f"no product exponent is determined by windows {a.window} and {b.window}")
    w = ExponentWindow(tuple(zip(lo, hi)))
    out = {}
    for e1, c1 in a.coeffs.items():
        for e2, c2 in b.coeffs.items():
            e = tuple(map(_add, e1, e2))
            if not w.contains(e):
                continue
            p = c1 * c2
            if not p.terms:
                continue
            if e in out:
                s = out[e] + p
                if s.terms:
                    out[e] = s
                else:
                    del out[e]
            else:
                out[e] = p
    return TruncatedSeries._make(a.ring, a.variables, w, out)


def _uni_mul(a: dict, b: dict, hi, lo=None) -> dict:
    out = {}
    for i, x in a.items():
        for j, y in b.items():
            k = i + j
            if hi is not None and k > hi:
                continue
            if lo is not None and k < lo:
                continue
            p = x * y
            if not p.terms:
                continue
            if k in out:
                s = out[k] + p
                if s.terms:
                    out[k] = s
                else:
                    del out[k]
            else:
                out[k] = p
    return out


def _direction(s: TruncatedSeries, at=None):
    lo, hi = s._uni()
    if at is not None:
        if at not in ("zero", "infinity"):
            raise ValueError("at must be 'zero' or 'infinity'")
        if at == "zero" and lo is not None:
            raise IllDefinedComposition("series is not known near zero")
        if at == "infinity" and hi is not None:
            raise IllDefinedComposition("series is not known near infinity")
        return at
    if lo is None:
        return "zero"
    if hi is None:
        return "infinity"
    raise IllDefinedComposition(f"series unknown on both sides of window {s.window}")


def reciprocal(s: TruncatedSeries, order=None, at=None) -> TruncatedSeries:
    """1/s expanded at zero (lowest term leading) or at infinity (highest term leading).

    `order` caps the expansion: the highest (at zero) or lowest (at infinity)
    exponent kept when the inverse would otherwise be infinite.
    """
    if not s.coeffs:
        raise NotInvertible("zero series")
    if s.is_exact():
        big = [e for e, c in s.coeffs.items() if not c.is_nilpotent()]
        if len(big) == 1 and s.coeffs[big[0]].is_invertible():
            return _reciprocal_dominant(s, big[0][0])
    d = _direction(s, at)
    if d == "infinity":
        r = reciprocal(s.reflect(), None if order is None else -order, "zero")
        return r.reflect()
    _lo, hi = s._uni()
    v = s.min_exp()
    c = s.coeffs[(v,)]
    try:
        cinv = c.inverse()
    except NotInvertible:
        raise NotInvertible(f"leading coefficient {c} of x^{v} is not invertible") from None
    u = {e[0] - v: x * cinv for e, x in s.coeffs.items() if e[0] != v}
    neg_u = {k: -x for k, x in u.items()}
    if hi is None and all(x.is_nilpotent() for x in u.values()):
        # nilpotent tail: the geometric series terminates, result is exact
        total = _geometric(neg_u, None, s.ring.max_degree + 1)
        out = {(k - v,): x * cinv for k, x in total.items()}
        return TruncatedSeries._make(s.ring, s.variables, ExponentWindow.full(1), out)
    # 1/s = cinv x^-v sum (-u)^m ; u known up to exponent hi - v
    limit = None if hi is None else hi - v
    if order is not None:
        cap = order + v
        limit = cap if limit is None else min(limit, cap)
    if limit is None:
        raise ValueError("order needed to expand an infinite reciprocal")
    if limit < 0:
        raise EmptyResultWindow("reciprocal window is empty")
    total = _geometric(neg_u, limit, limit)
    out = {(k - v,): x * cinv for k, x in total.items()}
    return TruncatedSeries._make(s.ring, s.variables, ExponentWindow(((None, limit - v),)), out)


def _reciprocal_dominant(s: TruncatedSeries, v: int) -> TruncatedSeries:
    """Exact 1/s when s = c x^v + (nilpotent Laurent polynomial)."""
    c = s.coeffs[(v,)]
    cinv = c.inverse()
    neg_u = {e[0] - v: -(x * cinv) for e, x in s.coeffs.items() if e[0] != v}
    total = _geometric(neg_u, None, s.ring.max_degree + 1) if neg_u else {0: s.ring.one()}
    out = {(k - v,): x * cinv for k, x in total.items()}
    return TruncatedSeries._make(s.ring, s.variables, ExponentWindow.full(1), {e: x for e, x in out.items() if x.terms})


def taylor(p: TruncatedSeries, q, order=None) -> TruncatedSeries:
    """p(q + t) as a series in t, for an exact univariate p."""
    if not p.is_exact():
        raise ValueError("taylor expansion needs an exact series")
    ring = p.ring
    q = ring.coerce(q)
    out = {}
    need_window = False
    for (n,), c in p.coeffs.items():
        if n >= 0:
            for k in range(n + 1):
                v = c * binom(n, k) * q ** (n - k)
                out[k] = out[k] + v if k in out else v
        else:
            if order is None:
                raise ValueError("order needed to expand a negative power")
            need_window = True
            for k in range(order + 1):
                v = c * binom(n, k) * q ** (n - k)
                out[k] = out[k] + v if k in out else v
    window = ((None, order),) if need_window else None
    return TruncatedSeries(ring, p.variables, window, {(k,): v for k, v in out.items()})


def _geometric(neg_u: dict, limit, steps: int) -> dict:
    ring = next(iter(neg_u.values())).ring if neg_u else None
    if ring is None:
        return {}
    total = {0: ring.one()}
    term = {0: ring.one()}
    for _ in range(steps):
        term = _uni_mul(term, neg_u, limit)
        if not term:
            break
        for k, x in term.items():
            t = total[k] + x if k in total else x
            if t.terms:
                total[k] = t
            else:
                total.pop(k, None)
    return total


def power(s: TruncatedSeries, k: int, order=None, at=None) -> TruncatedSeries:
    if k == 0:
        return TruncatedSeries(s.ring, s.variables, None, {(0,) * s.nvars: 1})
    if k < 0:
        return power(reciprocal(s, order, at), -k)
    result = s
    for _ in range(k - 1):
        result = multiply(result, s)
    return result


# ---------------------------------------------------------------------------
# composition


def compose(g: TruncatedSeries, f: TruncatedSeries, order=None, at=None) -> TruncatedSeries:
    """g(f(x)) for univariate series in the same variable.

    Supported: g an exact Laurent polynomial (f must be invertible when g has
    negative exponents), or f with an invertible leading term in a definite
    direction, in which case unknown coefficients of g are tracked into the
    output window.
    """
    g._uni()
    f._uni()
    g._same_space(f)
    if not f.coeffs:
        if g.is_exact() and all(e[0] >= 0 for e in g.coeffs):
            c = g.coeffs.get((0,))
            return TruncatedSeries(g.ring, g.variables, f.window, {(0,): c} if c is not None else {})
        raise IllDefinedComposition("composition with the zero series")
    lg, hg = g.window[0]
    window_cap = None
    if not g.is_exact():
        try:
            if at is None and f.is_exact():
                # an exact inner series can be read in either direction; the
                # outer window decides which one is meaningful
                at = "infinity" if lg is not None else "zero"
            d = _direction(f, at)
        except IllDefinedComposition as exc:
            raise IllDefinedComposition(f"cannot substitute into a windowed series: {exc}") from None
        v = f.min_exp() if d == "zero" else f.max_exp()
        if v == 0:
            raise IllDefinedComposition("inner series has a nonzero constant leading term")
        lead = f.coeffs[(v,)]
        if v < 0 or any(e[0] < 0 for e in g.coeffs) or lg is not None:
            if not lead.is_invertible():
                raise IllDefinedComposition(f"leading coefficient {lead} of inner series is not invertible")
        sgn = 1 if d == "zero" else -1
        # unknown g_k contaminate exponents >= k v (zero) or <= k v (infinity)
        vv = v * sgn
        if vv > 0:
            if lg is not None:
                raise IllDefinedComposition("outer series unknown below its window")
            if hg is not None:
                window_cap = (hg + 1) * vv - 1
        else:
            if hg is not None:
                raise IllDefinedComposition("outer series unknown above its window")
            if lg is not None:
                window_cap = (lg - 1) * vv - 1
        if window_cap is not None:
            window_cap *= sgn
    else:
        d = at
    total = None
    cache = {}
    inv = None
    for (k,), c in sorted(g.coeffs.items()):
        if k >= 0:
            p = _cached_power(f, k, cache)
        else:
            if inv is None:
                try:
                    inv = reciprocal(f, _inv_order(order, window_cap, d), d)
                except NotInvertible as exc:
                    raise IllDefinedComposition(f"negative powers need an invertible inner series: {exc}") from None
            p = _cached_power(inv, -k, cache, key="inv")
        term = p.scale(c)
        total = term if total is None else total + term
    if total is None:
        total = TruncatedSeries(g.ring, g.variables, None, {})
        if not g.is_exact():
            total = total.with_window(f.window if f.window.restricted() else None)
    if window_cap is not None:
        if d == "infinity":
            total = total.truncate_below(window_cap)
        else:
            total = total.truncate_above(window_cap)
    if order is not None and not total.is_exact():
        if (d or "zero") == "zero":
            total = total.truncate_above(order)
        else:
            total = total.truncate_below(order)
    elif order is not None and total.is_exact() and not g.is_exact():
        total = total.truncate_above(order) if (d or "zero") == "zero" else total.truncate_below(order)
    return total


def _inv_order(order, cap, d):
    if order is not None:
        return order
    return cap


def _cached_power(f, k, cache, key="f"):
    if (key, k) in cache:
        return cache[(key, k)]
    if k == 0:
        r = TruncatedSeries(f.ring, f.variables, None, {(0,): 1})
    elif k == 1:
        r = f
    else:
        r = multiply(_cached_power(f, k - 1, cache, key), f)
    cache[(key, k)] = r
    return r


def compositional_inverse(f: TruncatedSeries, order: int, at=None) -> TruncatedSeries:
    """f^{-1} with f(f^{-1}(x)) = x through x^order (or down to x^-order at infinity).

    At zero f must be c x + O(x^2); at infinity c x + O(1).  When the result
    satisfies the identity exactly it is returned as an exact series.
    """
    if order < 1:
        raise ValueError("order must be positive")
    f._uni()
    lo, hi = f.window[0]
    d = at or ("zero" if lo is None and (hi is not None or f.min_exp() is None or f.min_exp() >= 1) else "infinity")
    if d == "infinity":
        # h(y) = 1/f(1/y) is a series at zero; f^{-1}(x) = 1/h^{-1}(1/x)
        h = reciprocal(f.reflect(), order + 1, "zero")
        hinv = compositional_inverse(h, order + 1, "zero")
        r = reciprocal(hinv, order + 1, "zero").reflect()
        return r if r.is_exact() else r.truncate_below(-order)
    if f.coeffs.get((0,)) is not None and f.coeffs[(0,)].terms:
        raise NotInvertible("series has a nonzero constant term")
    if f.min_exp() is None or f.min_exp() < 1:
        raise NotInvertible("series has negative exponents")
    c = f.coeffs.get((1,))
    if c is None or not c.is_invertible():
        raise NotInvertible(f"linear coefficient {c} is not invertible")
    cinv = c.inverse()
    ring = f.ring
    x = TruncatedSeries(ring, f.variables, None, {(1,): 1})
    rest = TruncatedSeries._make(ring, f.variables, f.window, {e: v for e, v in f.coeffs.items() if e != (1,)})
    cap = order if hi is None else min(order, hi)
    h = TruncatedSeries(ring, f.variables, ((None, cap),), {(1,): cinv})
    for _ in range(cap):
        r = compose(rest.truncate_above(cap) if not rest.is_exact() else rest, h, order=cap)
        new = (x - r).scale(cinv).truncate_above(cap)
        if series_equal(new, h) and new.window == h.window:
            break
        h = new
    candidate = h.exact()
    if f.is_exact():
        try:
            check = compose(f, candidate)
        except (IllDefinedComposition, ValueError):
            check = None
        if check is not None and check.is_exact() and series_equal(check, x):
            return candidate
    return h


# ---------------------------------------------------------------------------
# residues and iota expansions


def residue(s: TruncatedSeries, var) -> TruncatedSeries:
    i = s.variables.index(var)
    lo, hi = s.window[i]
    if (lo is not None and lo > -1) or (hi is not None and hi < -1):
        raise WindowExcludesResidue(f"exponent -1 of {var} is outside window {s.window}")
    rest_vars = s.variables[:i] + s.variables[i + 1:]
    rest_win = s.window.bounds[:i] + s.window.bounds[i + 1:]
    out = {}
    for e, c in s.coeffs.items():
        if e[i] == -1:
            out[e[:i] + e[i + 1:]] = c
    return TruncatedSeries._make(s.ring, rest_vars, ExponentWindow(tuple(rest_win)), out)


def iota_expand(ring, variables, a, b, n: int, sign: int = 1, direction=None, window=None) -> TruncatedSeries:
    """(x_a + sign*x_b)^n, expanded in nonnegative powers of `direction`.

    The result is known everywhere, so it is returned as the slice of the full
    expansion on the requested window (exact when n >= 0 and no window given).
    """
    variables = tuple(variables)
    direction = b if direction is None else direction
    if direction not in (a, b):
        raise ValueError("direction must be one of the two variables")
    ia, ib = variables.index(a), variables.index(b)
    nv = len(variables)
    w = _window(window, nv)
    out = {}

    def put(ka, kb, val):
        e = [0] * nv
        e[ia] = ka
        e[ib] = kb
        e = tuple(e)
        if w.contains(e):
            out[e] = ring.const(val)

    # the "small" variable carries the nonnegative powers k
    small, _big = (ib, ia) if direction == b else (ia, ib)
    s_small = sign if direction == b else 1
    s_big = 1 if direction == b else sign
    if n >= 0:
        for k in range(n + 1):
            val = binom(n, k) * Fraction(s_small) ** k * Fraction(s_big) ** (n - k)
            if small == ib:
                put(n - k, k, val)
            else:
                put(k, n - k, val)
        return TruncatedSeries(ring, variables, w, out)
    lo, hi = w[small]
    if hi is None:
        raise ValueError("window must bound the expansion variable for negative powers")
    for k in range(max(0, lo or 0), hi + 1):
        val = binom(n, k) * Fraction(s_small) ** k * Fraction(s_big) ** (n - k)
        if small == ib:
            put(n - k, k, val)
        else:
            put(k, n - k, val)
    return TruncatedSeries(ring, variables, w, out)


# ---------------------------------------------------------------------------
# delta functions


def delta_series(ring, variables, window, y, a, b, sign: int = 1, y_sign: int = 1, extra=None) -> TruncatedSeries:
    """y^{-1} delta((a + sign*b)/(y_sign*y)) on a bounded box window.

    Equals sum_n y_sign^{-n} y^{-n-1} (a + sign*b)^n with (a + sign*b)^n
    expanded in nonnegative powers of b.  Every box point fixes (n, j) uniquely,
    so the slice is exact.
    """
    variables = tuple(variables)
    w = _window(window, len(variables))
    iy, ia, ib = (variables.index(v) for v in (y, a, b))
    out = {}
    for e in w.points():
        if any(e[i] for i in range(len(variables)) if i not in (iy, ia, ib)):
            continue
        n = -e[iy] - 1
        j = e[ib]
        if j < 0 or e[ia] != n - j:
            continue
        val = binom(n, j) * Fraction(sign) ** j * Fraction(y_sign) ** (-n if n <= 0 else n)
        if val:
            out[e] = ring.const(val)
    return TruncatedSeries(ring, variables, w, out)


def plain_delta(ring, variables, window, num, den) -> TruncatedSeries:
    """delta(num/den) = sum_n num^n den^-n on a box window."""
    variables = tuple(variables)
    w = _window(window, len(variables))
    i, j = variables.index(num), variables.index(den)
    out = {}
    for e in w.points():
        if e[i] + e[j] == 0 and not any(e[k] for k in range(len(variables)) if k not in (i, j)):
            out[e] = ring.one()
    return TruncatedSeries(ring, variables, w, out)


def limit_x1_to_x2(X: TruncatedSeries, x1="x1", x2="x2") -> TruncatedSeries:
    """X(x2, x2) as a series in (x1, x2) with x1-exponent 0."""
    i, j = X.variables.index(x1), X.variables.index(x2)
    others = [k for k in range(X.nvars) if k not in (i, j)]
    if any(X.window[k] != (None, None) for k in (i, j)):
        raise LimitUndetermined(
            f"setting {x1}={x2} needs every antidiagonal coefficient, but the window is {X.window}"
        )
    out = {}
    for e, c in X.coeffs.items():
        ne = list(e)
        ne[j] = e[i] + e[j]
        ne[i] = 0
        ne = tuple(ne)
        out[ne] = out[ne] + c if ne in out else c
    nb = list(X.window.bounds)
    for k in others:
        nb[k] = X.window[k]
    return TruncatedSeries(X.ring, X.variables, ExponentWindow(tuple(nb)), out)


@dataclass
class DeltaLawReport:
    delta1: bool
    delta2: bool
    delta3: bool
    window: str
    witnesses: dict

    @property
    def all_pass(self) -> bool:
        return self.delta1 and self.delta2 and self.delta3


def delta2_sides(ring, radius: int):
    vars3 = ("x0", "x1", "x2")
    w = ExponentWindow.box(radius, 3)
    left = delta_series(ring, vars3, w, "x1", "x2", "x0", sign=1)
    right = delta_series(ring, vars3, w, "x2", "x1", "x0", sign=-1)
    return left, right


def delta3_sides(ring, radius: int):
    vars3 = ("x0", "x1", "x2")
    w = ExponentWindow.box(radius, 3)
    first = delta_series(ring, vars3, w, "x0", "x1", "x2", sign=-1)
    second = delta_series(ring, vars3, w, "x0", "x2", "x1", sign=-1, y_sign=-1)
    right = delta_series(ring, vars3, w, "x2", "x1", "x0", sign=-1)
    return first, second, right


def delta_laws_check(X: TruncatedSeries, window=None, radius: int = 8, mutate=None) -> DeltaLawReport:
    """Check the three delta-function laws.

    X is a series in (x1, x2); the first law is checked on the product window
    determined by the delta slice of the given radius.  `mutate` optionally
    names one of 'delta1', 'delta2', 'delta3' plus an exponent, perturbing that
    law's first series by one unit there (for witness tests).
    """
    ring = X.ring
    if window is not None:
        w = _window(window, 3)
        radius = max(max(abs(lo), abs(hi)) for lo, hi in w.bounds)
    witnesses = {}
    # first law
    vars2 = tuple(X.variables)
    if set(vars2) != {"x1", "x2"}:
        raise ValueError("X must be a series in x1, x2")
    dw = ExponentWindow.box(radius, 2)
    d = plain_delta(ring, vars2, dw, "x1", "x2")
    if mutate and mutate[0] == "delta1":
        d = d + TruncatedSeries(ring, vars2, dw, {mutate[1]: 1})
    lim = limit_x1_to_x2(X, "x1", "x2")
    lhs = multiply(d, X)
    dd = plain_delta(ring, vars2, dw, "x1", "x2")
    rhs = multiply(dd, lim)
    w1 = lhs.window.intersect(rhs.window)
    if w1 is None:
        raise EmptyResultWindow("first delta law has no determined window")
    wit1 = compare(lhs.restrict(w1), rhs.restrict(w1))
    if wit1:
        witnesses["delta1"] = wit1
    # second and third laws on the box
    left, right = delta2_sides(ring, radius)
    if mutate and mutate[0] == "delta2":
        left = left + TruncatedSeries(ring, left.variables, left.window, {mutate[1]: 1})
    wit2 = compare(left, right)
    if wit2:
        witnesses["delta2"] = wit2
    first, second, right3 = delta3_sides(ring, radius)
    if mutate and mutate[0] == "delta3":
        first = first + TruncatedSeries(ring, first.variables, first.window, {mutate[1]: 1})
    wit3 = compare(first - second, right3)
    if wit3:
        witnesses["delta3"] = wit3
    return DeltaLawReport(
        delta1="delta1" not in witnesses,
        delta2="delta2" not in witnesses,
        delta3="delta3" not in witnesses,
        window=f"delta1 on {w1}; delta2/3 on {ExponentWindow.box(radius, 3)}",
        witnesses=witnesses,
    )
