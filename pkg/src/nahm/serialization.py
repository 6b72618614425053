"""JSON (de)serialization of solutions.

Complex entries are stored as ``[re, im]`` pairs of JSON numbers. Python's
float ``repr`` is the shortest string that round-trips, so values survive a
write/read cycle bit for bit. Site keys are doubled integers written as
strings.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaMismatch, ShapeMismatch, ValidationError
from .lattice import NahmSolution
from .typedata import MonopoleType

SCHEMA = "nahm-solution/1"
_TABLES = (("beta", "beta"), ("gamma", "gamma"), ("a", "avec"), ("b", "bvec"))


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _decode_matrix(obj, where: str) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ShapeMismatch(f"{where}: entries are not [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ShapeMismatch(f"{where}: expected a matrix of [re, im] pairs, got array of shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def solution_to_json(s: NahmSolution, meta: dict | None = None) -> dict:
    out = {"schema": SCHEMA, "doubled_index": True, "type": s.type.to_json()}
    for name, attr in _TABLES:
        table = getattr(s, attr)
        out[name] = {str(k): _encode_matrix(table[k]) for k in sorted(table)}
    if meta:
        out["meta"] = meta
    return out


def solution_from_json(obj: dict) -> NahmSolution:
    if not isinstance(obj, dict):
        raise ParseError("solution document is not a JSON object")
    if obj.get("schema") != SCHEMA:
        raise SchemaMismatch(f"expected schema {SCHEMA!r}, found {obj.get('schema')!r}")
    if obj.get("doubled_index") is not True:
        raise SchemaMismatch("missing doubled_index marker")
    t = MonopoleType.from_json(obj.get("type", {}))
    tables = []
    for name, _ in _TABLES:
        raw = obj.get(name)
        if not isinstance(raw, dict):
            raise SchemaMismatch(f"missing table {name!r}")
        table = {}
        for key, val in raw.items():
            try:
                site = int(key)
            except ValueError as exc:
                raise SchemaMismatch(f"{name}: site key {key!r} is not an integer") from exc
            table[site] = _decode_matrix(val, f"{name} at site {site}")
        tables.append(table)
    return NahmSolution(t, *tables)


def dumps_solution(s: NahmSolution, meta: dict | None = None) -> str:
    return json.dumps(solution_to_json(s, meta), indent=1, sort_keys=False) + "\n"


def loads_solution(text: str) -> NahmSolution:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return solution_from_json(obj)


def write_solution(s: NahmSolution, path, meta: dict | None = None) -> None:
    Path(path).write_text(dumps_solution(s, meta))


def read_solution(path) -> NahmSolution:
    return loads_solution(Path(path).read_text())


def read_type(spec: str) -> MonopoleType:
    """Type from inline JSON or a file path.

    Accepts ``{"N", "p2", "k"}`` (doubled masses) or ``{"p": [...], "k": [...]}``
    with masses as numbers or strings like ``"-3/2"``.
    """
    text = spec.strip()
    if not text.startswith("{"):
        text = Path(spec).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid type JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("type document is not a JSON object")
    if "p2" in obj:
        if "N" not in obj:
            obj = dict(obj, N=len(obj["p2"]) + 1)
        return MonopoleType.from_json(obj)
    if "p" in obj and "k" in obj:
        from .typedata import derive_type

        return derive_type(obj["p"], obj["k"])
    raise ValidationError("type needs fields p2 (or p) and k")
