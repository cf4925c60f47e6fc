"""JSON encodings. Rationals are always strings ("3", "1/2", "inf")."""

from __future__ import annotations

from typing import Any

from .apx import ApproximateIsometry, JointEmbeddingWitness
from .extq import FiniteMetricSpace, StructuralError, format_extq, to_extq, to_rational
from .structures import FinStructure, Signature


class SchemaError(ValueError):
    """Malformed JSON input; ``path`` locates the offending node."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


def q(x) -> str:
    return format_extq(to_extq(x))


def _need(obj, key, path):
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    if key not in obj:
        raise SchemaError(path, f"missing key {key!r}")
    return obj[key]


def _rational(v, path, allow_inf=False):
    if not isinstance(v, (str, int)) or isinstance(v, bool):
        raise SchemaError(path, f"expected a rational string, got {v!r}")
    try:
        return to_extq(v) if allow_inf else to_rational(v)
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise SchemaError(path, str(e)) from None


def space_to_json(s: FiniteMetricSpace) -> dict:
    return {"points": list(s.points), "dist": [[q(v) for v in r] for r in s.dist]}


def space_from_json(d: Any, path: str = "$") -> FiniteMetricSpace:
    pts = _need(d, "points", path)
    rows = _need(d, "dist", path)
    if not isinstance(pts, list) or not all(isinstance(p, str) for p in pts):
        raise SchemaError(path + ".points", "expected a list of strings")
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise SchemaError(path + ".dist", "expected a list of rows")
    vals = [[_rational(v, f"{path}.dist[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)]
    try:
        return FiniteMetricSpace(tuple(pts), tuple(tuple(r) for r in vals))
    except StructuralError as e:
        raise SchemaError(path, str(e)) from None


def apx_to_json(phi: ApproximateIsometry) -> dict:
    return {
        "source": space_to_json(phi.source),
        "target": space_to_json(phi.target),
        "values": [[q(v) for v in r] for r in phi.values],
    }


def apx_from_json(d: Any, path: str = "$") -> ApproximateIsometry:
    src = space_from_json(_need(d, "source", path), path + ".source")
    dst = space_from_json(_need(d, "target", path), path + ".target")
    rows = _need(d, "values", path)
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise SchemaError(path + ".values", "expected a list of rows")
    vals = [[_rational(v, f"{path}.values[{i}][{j}]", True) for j, v in enumerate(r)] for i, r in enumerate(rows)]
    try:
        return ApproximateIsometry(src, dst, tuple(tuple(r) for r in vals))
    except StructuralError as e:
        raise SchemaError(path + ".values", str(e)) from None


def witness_to_json(w: JointEmbeddingWitness) -> dict:
    return {
        "ambient": space_to_json(w.ambient),
        "iota": dict(w.iota),
        "eta": dict(w.eta),
    }


def structure_to_json(s: FinStructure) -> dict:
    out = space_to_json(s.domain)
    sig = s.signature
    if sig.relations:
        out["relations"] = {
            name: [[list(args), q(v)] for args, v in sorted(s.relations[name].items())]
            for name, _ in sig.relations
        }
        out["relation_arities"] = dict(sig.relations)
    if sig.functions:
        out["functions"] = {
            name: [[list(args), v] for args, v in sorted(s.functions[name].items())]
            for name, _ in sig.functions
        }
        out["function_arities"] = dict(sig.functions)
    return out


def structure_from_json(d: Any, path: str = "$") -> FinStructure:
    dom = space_from_json(d, path)
    rel_ar = d.get("relation_arities", {})
    fun_ar = d.get("function_arities", {})
    sig = Signature(tuple(fun_ar.items()), tuple(rel_ar.items()))
    rels = {
        name: {tuple(a): _rational(v, f"{path}.relations.{name}") for a, v in rows}
        for name, rows in d.get("relations", {}).items()
    }
    funs = {name: {tuple(a): v for a, v in rows} for name, rows in d.get("functions", {}).items()}
    try:
        return FinStructure(dom, sig, rels, funs)
    except StructuralError as e:
        raise SchemaError(path, str(e)) from None


