"""JSON encodings for interval algebras, maps and diagonal morphisms.

A morphism looks like
``{"source": {"p": 1, "n": 2}, "target": {"p": 1, "n": 8},
"maps": [{"breaks": ["0", "1"], "affine": [["1/4", "0"]]}, ...], "perm": [2, 0, 1, 3]}``.
For scalar maps each affine entry is ``[slope, intercept]``; for maps into
the square it is ``[[s1, s2], [c1, c2]]``. ``perm`` may list whole blocks
(length k) or scalar indices (length n_target). A non-Lebesgue trace is
given as ``"trace": <map>`` with an increasing homeomorphism.
"""

from __future__ import annotations

from typing import Any

from ..extq import StructuralError
from ..serialize import SchemaError, _need, _rational
from .core import CubeAlgebra, DiagonalMorphism
from .pwa import PiecewiseAffineMap, _q


def _signed(v, path):
    if not isinstance(v, (str, int)) or isinstance(v, bool):
        raise SchemaError(path, f"expected a rational string, got {v!r}")
    try:
        return _q(v)
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise SchemaError(path, str(e)) from None


def map_to_json(t: PiecewiseAffineMap) -> dict:
    def enc(vec):
        return str(vec[0]) if t.dim == 1 else [str(v) for v in vec]

    return {"breaks": [str(b) for b in t.breaks], "affine": [[enc(s), enc(c)] for s, c in t.pieces]}


def map_from_json(d: Any, path: str = "$") -> PiecewiseAffineMap:
    breaks = _need(d, "breaks", path)
    aff = _need(d, "affine", path)
    if not isinstance(breaks, list) or not isinstance(aff, list):
        raise SchemaError(path, "breaks and affine must be lists")
    bs = [_rational(b, f"{path}.breaks[{i}]") for i, b in enumerate(breaks)]
    pieces = []
    for i, pc in enumerate(aff):
        p = f"{path}.affine[{i}]"
        if not isinstance(pc, list) or len(pc) != 2:
            raise SchemaError(p, "expected [slope, intercept]")
        s, c = pc
        if isinstance(s, list) != isinstance(c, list):
            raise SchemaError(p, "slope and intercept must have the same shape")
        if isinstance(s, list):
            pieces.append((tuple(_signed(v, p) for v in s), tuple(_signed(v, p) for v in c)))
        else:
            pieces.append(((_signed(s, p),), (_signed(c, p),)))
    try:
        return PiecewiseAffineMap(tuple(bs), tuple(pieces))
    except StructuralError as e:
        raise SchemaError(path, str(e)) from None


def algebra_to_json(A: CubeAlgebra) -> dict:
    out: dict = {"p": A.p, "n": A.n}
    if A.alpha is not None:
        out["trace"] = map_to_json(A.alpha)
    return out


def algebra_from_json(d: Any, path: str = "$") -> CubeAlgebra:
    p, n = _need(d, "p", path), _need(d, "n", path)
    if not isinstance(p, int) or not isinstance(n, int):
        raise SchemaError(path, "p and n must be integers")
    alpha = None
    tr = d.get("trace", "lebesgue")
    if tr != "lebesgue":
        alpha = map_from_json(tr, path + ".trace")
    try:
        return CubeAlgebra(p, n, alpha)
    except StructuralError as e:
        raise SchemaError(path, str(e)) from None


def morphism_to_json(dm: DiagonalMorphism) -> dict:
    return {
        "source": algebra_to_json(dm.source),
        "target": algebra_to_json(dm.target),
        "maps": [map_to_json(t) for t in dm.maps],
        "perm": list(dm.perm),
    }


def morphism_from_json(d: Any, path: str = "$") -> DiagonalMorphism:
    src = algebra_from_json(_need(d, "source", path), path + ".source")
    tgt = algebra_from_json(_need(d, "target", path), path + ".target")
    maps = _need(d, "maps", path)
    if not isinstance(maps, list):
        raise SchemaError(path + ".maps", "expected a list")
    ts = tuple(map_from_json(m, f"{path}.maps[{i}]") for i, m in enumerate(maps))
    perm = d.get("perm", [])
    if not isinstance(perm, list) or not all(isinstance(i, int) for i in perm):
        raise SchemaError(path + ".perm", "expected a list of integers")
    try:
        return DiagonalMorphism(src, tgt, ts, tuple(perm))
    except StructuralError as e:
        raise SchemaError(path, str(e)) from None
