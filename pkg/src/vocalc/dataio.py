"""JSON data files: VOC data, moduli elements and graded maps.

Rationals are strings "p/q".  Ring coefficients in moduli files are either a
rational string, a declared parameter name, or a list of terms
[["p/q", {"name": exponent, ...}], ...].
"""
from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path

import jsonschema

from .errors import CoincidentPunctures, InvariantViolation, SchemaError
from .graded import GradedMap1n, GradedSpace
from .series import ParameterRing
from .virasoro import LocalCoordinate

RATIONAL = r"^-?[0-9]+(/[0-9]+)?$"

_rat = {"type": "string", "pattern": RATIONAL}
_int = {"type": "integer"}
_pair = {"type": "array", "items": _int, "minItems": 2, "maxItems": 2}
_space = {
    "type": "object",
    "required": ["wmin", "wmax", "dims"],
    "properties": {"wmin": _int, "wmax": _int, "dims": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
    "additionalProperties": False,
}
_coeff = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [_rat, {"type": "object", "additionalProperties": {"type": "integer"}}],
                "minItems": 2,
                "maxItems": 2,
            },
        },
    ]
}

SCHEMAS = {
    "voc": {
        "type": "object",
        "required": ["type", "space", "delta", "c"],
        "properties": {
            "type": {"const": "voc"},
            "space": _space,
            "closed": {"type": "boolean"},
            "rank_d": _rat,
            "delta": {
                "type": "array",
                "items": {"type": "array", "prefixItems": [_int, _int, _int, {"type": "array", "items": _int}, {"type": "array", "items": _int}, _rat], "minItems": 6, "maxItems": 6},
            },
            "c": {"type": "array", "items": {"type": "array", "prefixItems": [_int, _int, _rat], "minItems": 3, "maxItems": 3}},
            "rho": {"type": "array", "items": {"type": "array", "prefixItems": [_int, _int, _rat], "minItems": 3, "maxItems": 3}},
        },
        "additionalProperties": False,
    },
    "moduli": {
        "type": "object",
        "required": ["type", "family", "positions", "coords"],
        "properties": {
            "type": {"const": "moduli"},
            "family": {"enum": ["K", "Kstar"]},
            "parameters": {
                "type": "object",
                "properties": {
                    "graded": {"type": "array", "items": {"type": "string"}},
                    "units": {"type": "array", "items": {"type": "string"}},
                    "max_degree": {"type": "integer", "minimum": 1},
                },
                "additionalProperties": False,
            },
            "positions": {"type": "array", "items": _coeff},
            "coords": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["a0", "A"],
                    "properties": {"a0": _coeff, "A": {"type": "array", "items": _coeff}},
                    "additionalProperties": False,
                },
            },
        },
        "additionalProperties": False,
    },
    "graded_map": {
        "type": "object",
        "required": ["type", "space", "n", "entries"],
        "properties": {
            "type": {"const": "graded_map"},
            "space": _space,
            "n": {"type": "integer", "minimum": 0},
            "entries": {
                "type": "array",
                "items": {"type": "array", "prefixItems": [_int, _int, {"type": "array", "items": _int}, {"type": "array", "items": _int}, _rat], "minItems": 5, "maxItems": 5},
            },
        },
        "additionalProperties": False,
    },
}


def parse_rational(s: str) -> Fraction:
    if not re.match(RATIONAL, s):
        raise SchemaError(f"not a rational 'p/q': {s!r}")
    return Fraction(s)


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def validate_and_load(path):
    """Load a data file into VocData, ModuliElement or GradedMap1n, checking
    schema first and the type invariants after."""
    doc = read_json(path)
    return load_document(doc, str(path))


def load_document(doc, where="<input>"):
    if not isinstance(doc, dict) or doc.get("type") not in SCHEMAS:
        raise SchemaError(f"{where}: field 'type' must be one of {sorted(SCHEMAS)}")
    kind = doc["type"]
    errors = sorted(jsonschema.Draft202012Validator(SCHEMAS[kind]).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise SchemaError(f"{where}: field {_path(e)}: {e.message}")
    return {"voc": _load_voc, "moduli": _load_moduli, "graded_map": _load_graded}[kind](doc, where)


def _load_space(d, where):
    try:
        return GradedSpace(d["wmin"], d["wmax"], tuple(d["dims"]))
    except ValueError as exc:
        raise InvariantViolation(f"{where}: field space: {exc}") from None


def _check_basis(space, w, i, where):
    if not 0 <= i < space.dim(w):
        raise InvariantViolation(f"{where}: basis vector ({w}, {i}) lies outside the declared space")


def _load_voc(doc, where):
    from .voc import VocData

    space = _load_space(doc["space"], where)
    rows = []
    for n, (k, w, i, ow, oi, v) in enumerate(doc["delta"]):
        _check_basis(space, w, i, f"{where}: field delta/{n}")
        if len(ow) == 2 and len(oi) == 2:
            for a, b in zip(ow, oi):
                _check_basis(space, a, b, f"{where}: field delta/{n}")
        rows.append((k, w, i, ow, oi, parse_rational(v)))
    c, rho = {}, {}
    for name, target in (("c", c), ("rho", rho)):
        for n, (w, i, v) in enumerate(doc.get(name, [])):
            _check_basis(space, w, i, f"{where}: field {name}/{n}")
            target[(w, i)] = parse_rational(v)
    try:
        return VocData.from_components(space, rows, c, rho, parse_rational(doc.get("rank_d", "0")), doc.get("closed", True))
    except InvariantViolation as exc:
        raise InvariantViolation(f"{where}: {exc}") from None


def _coefficient(ring, x, field):
    if isinstance(x, str):
        if re.match(RATIONAL, x):
            return ring.coerce(Fraction(x))
        if x in ring.names:
            return ring.param(x)
        raise SchemaError(f"field {field}: {x!r} is neither a rational nor a declared parameter")
    tot = ring.zero()
    for q, mono in x:
        term = ring.coerce(Fraction(q))
        for name, e in mono.items():
            if name not in ring.names:
                raise SchemaError(f"field {field}: undeclared parameter {name!r}")
            term = term * ring.param(name, e)
        tot = tot + term
    return tot


def _load_moduli(doc, where):
    from .moduli import ModuliElement

    p = doc.get("parameters", {})
    ring = ParameterRing(tuple(p.get("graded", ())), tuple(p.get("units", ())), p.get("max_degree", 3))
    positions = [_coefficient(ring, x, f"positions/{n}") for n, x in enumerate(doc["positions"])]
    for a in range(len(positions)):
        for b in range(a):
            if positions[a] == positions[b]:
                raise InvariantViolation(f"{where}: field positions/{a}: punctures must be distinct (equals positions/{b})")
    coords = []
    for n, c in enumerate(doc["coords"]):
        a0 = _coefficient(ring, c["a0"], f"coords/{n}/a0")
        A = [_coefficient(ring, x, f"coords/{n}/A/{j}") for j, x in enumerate(c["A"])]
        coords.append(LocalCoordinate.make(ring, a0, A, "infinity" if n == 0 and len(doc["coords"]) > 1 else "zero"))
    try:
        return ModuliElement(doc["family"], len(coords) - 1 if len(coords) > 1 else 0, tuple(positions), tuple(coords))
    except CoincidentPunctures as exc:
        raise InvariantViolation(f"{where}: field positions: punctures must be distinct ({exc})") from None
    except ValueError as exc:
        raise InvariantViolation(f"{where}: canonical form: {exc}") from None


def _load_graded(doc, where):
    space = _load_space(doc["space"], where)
    n = doc["n"]
    entries = {}
    for m, (w, i, ow, oi, v) in enumerate(doc["entries"]):
        f = f"{where}: field entries/{m}"
        if len(ow) != n or len(oi) != n:
            raise InvariantViolation(f"{f}: expected {n} output factors")
        _check_basis(space, w, i, f)
        for a, b in zip(ow, oi):
            _check_basis(space, a, b, f)
        key = (w, i, tuple(ow), tuple(oi))
        entries[key] = entries.get(key, 0) + parse_rational(v)
    return GradedMap1n(space, n, entries)


# ---------------------------------------------------------------------------
# writers


def _q(v) -> str:
    return str(Fraction(v))


def dump_voc(V) -> dict:
    return {
        "type": "voc",
        "space": {"wmin": V.space.wmin, "wmax": V.space.wmax, "dims": list(V.space.dims)},
        "closed": V.closed,
        "rank_d": _q(V.rank_d),
        "delta": [[k, w, i, list(ow), list(oi), _q(v)] for k, w, i, ow, oi, v in V.entries()],
        "c": [[w, i, _q(v)] for (w, i), v in sorted(V.c.items())],
        "rho": [[w, i, _q(v)] for (w, i), v in sorted(V.rho.items())],
    }


def dump_graded(f: GradedMap1n) -> dict:
    if f.tnames:
        raise ValueError("only maps without t variables are serialized")
    return {
        "type": "graded_map",
        "space": {"wmin": f.space.wmin, "wmax": f.space.wmax, "dims": list(f.space.dims)},
        "n": f.n,
        "entries": [[k, l, list(ow), list(oi), _q(v)] for (k, l, ow, oi, _), v in sorted(f.entries.items())],
    }
