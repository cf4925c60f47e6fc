"""Exact extended nonnegative rationals and finite (pseudo-)metric spaces."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from itertools import combinations
from math import lcm
from typing import Iterable, Sequence, Union


class StructuralError(ValueError):
    """Raised when inputs have the wrong shape (dimensions, unknown points)."""


@total_ordering
class _Infinity:
    """The point at infinity of [0, inf]. Addition saturates."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __add__(self, other):
        if isinstance(other, (_Infinity, Fraction, int)):
            return self
        return NotImplemented

    __radd__ = __add__

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        if isinstance(other, (_Infinity, Fraction, int)):
            return False
        return NotImplemented

    def __gt__(self, other):
        if isinstance(other, (Fraction, int)):
            return True
        if other is self:
            return False
        return NotImplemented

    def __hash__(self):
        return hash("inf")

    def __repr__(self):
        return "INF"

    __str__ = __repr__

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

ExtQ = Union[Fraction, _Infinity]


def is_inf(x) -> bool:
    return x is INF


def to_extq(x) -> ExtQ:
    """Parse an int, Fraction, ``"p/q"``, decimal string or ``"inf"``."""
    if x is INF:
        return INF
    if isinstance(x, Fraction):
        if x < 0:
            raise ValueError(f"negative value {x}")
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        if x < 0:
            raise ValueError(f"negative value {x}")
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if s.lower() in ("inf", "infinity", "+inf"):
            return INF
        q = Fraction(s)
        if q < 0:
            raise ValueError(f"negative value {x!r}")
        return q
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass a string such as '1/3'")
    raise TypeError(f"cannot interpret {x!r} as an extended rational")


def to_rational(x) -> Fraction:
    v = to_extq(x)
    if v is INF:
        raise ValueError("infinity is not allowed here")
    return v


def format_extq(x: ExtQ) -> str:
    if x is INF:
        return "inf"
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def extq_min(values: Iterable[ExtQ]) -> ExtQ:
    """Minimum with the empty-infimum convention ``min() = inf``."""
    best: ExtQ = INF
    for v in values:
        if v < best:
            best = v
    return best


def half(x: ExtQ) -> ExtQ:
    return INF if x is INF else x / 2


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Named finite point set with an exact rational distance table.

    The constructor only checks shape. Use :func:`validate_metric` for the
    metric axioms; pseudo-metrics use the same class.
    """

    points: tuple[str, ...]
    dist: tuple[tuple[Fraction, ...], ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        pts = tuple(str(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(set(pts)) != len(pts):
            raise StructuralError("duplicate point identifiers")
        n = len(pts)
        rows = tuple(tuple(to_rational(v) for v in row) for row in self.dist)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise StructuralError(
                f"distance table is not {n}x{n} for {n} points"
            )
        object.__setattr__(self, "dist", rows)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(pts)})

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p):
        return p in self._index

    def index(self, p: str) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise StructuralError(f"unknown point {p!r}") from None

    def d(self, x: str, y: str) -> Fraction:
        return self.dist[self.index(x)][self.index(y)]

    def subspace(self, pts: Iterable[str]) -> "FiniteMetricSpace":
        pts = list(dict.fromkeys(pts))
        idx = [self.index(p) for p in pts]
        return FiniteMetricSpace(
            tuple(pts), tuple(tuple(self.dist[i][j] for j in idx) for i in idx)
        )

    def diameter(self) -> Fraction:
        return max((max(r) for r in self.dist), default=Fraction(0))

    @classmethod
    def from_function(cls, points: Sequence[str], d) -> "FiniteMetricSpace":
        return cls(
            tuple(points), tuple(tuple(d(x, y) for y in points) for x in points)
        )

    @classmethod
    def single(cls, name: str = "p") -> "FiniteMetricSpace":
        return cls((name,), ((Fraction(0),),))


PseudoMetricSpace = FiniteMetricSpace


@dataclass(frozen=True)
class Violation:
    axiom: str
    witness: tuple[str, ...]

    def __str__(self):
        return f"{self.axiom} at {self.witness}"


def validate_metric(space: FiniteMetricSpace, pseudo: bool = False) -> list[Violation]:
    """Every violated axiom with its witnessing tuple; empty iff valid.

    With ``pseudo=True`` zero distances between distinct points are allowed.
    """
    pts = space.points
    D = _integer_table(space.dist)
    n = len(pts)
    out: list[Violation] = []
    for i in range(n):
        if D[i][i] != 0:
            out.append(Violation("nonzero diagonal", (pts[i],)))
    for i, j in combinations(range(n), 2):
        if D[i][j] != D[j][i]:
            out.append(Violation("asymmetry", (pts[i], pts[j])))
        if not pseudo and D[i][j] == 0:
            out.append(Violation("zero distance between distinct points", (pts[i], pts[j])))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for k in range(n):
                if k == i or k == j:
                    continue
                if D[i][k] > D[i][j] + D[j][k]:
                    out.append(Violation("triangle", (pts[i], pts[j], pts[k])))
    return out


def _integer_table(dist):
    """Scale a rational table to integers over a common denominator."""
    den = 1
    for r in dist:
        for v in r:
            den = lcm(den, v.denominator)
    return [[v.numerator * (den // v.denominator) for v in r] for r in dist]


def violations_involving(space: FiniteMetricSpace, new: Iterable[int]) -> list[Violation]:
    """Metric-axiom violations among triples touching an index in ``new``.

    Cheaper than :func:`validate_metric` when the rest is known to be a metric.
    """
    pts = space.points
    D = _integer_table(space.dist)
    n = len(pts)
    new = sorted(set(new))
    out: list[Violation] = []
    for i in new:
        if D[i][i] != 0:
            out.append(Violation("nonzero diagonal", (pts[i],)))
        for j in range(n):
            if j == i:
                continue
            if D[i][j] != D[j][i]:
                out.append(Violation("asymmetry", (pts[i], pts[j])))
            if D[i][j] == 0:
                out.append(Violation("zero distance between distinct points", (pts[i], pts[j])))
            for k in range(n):
                if k == i or k == j:
                    continue
                # i in each of the three positions
                if D[i][k] > D[i][j] + D[j][k]:
                    out.append(Violation("triangle", (pts[i], pts[j], pts[k])))
                if D[j][k] > D[j][i] + D[i][k]:
                    out.append(Violation("triangle", (pts[j], pts[i], pts[k])))
    return out


def is_metric(space: FiniteMetricSpace) -> bool:
    return not validate_metric(space)


def quotient(space: FiniteMetricSpace) -> tuple[FiniteMetricSpace, dict[str, str]]:
    """Collapse zero-distance classes of a pseudo-metric.

    Each class is represented by its first point in the original order; the
    projection maps every point to its representative.
    """
    bad = validate_metric(space, pseudo=True)
    if bad:
        raise StructuralError(f"not a pseudo-metric: {bad[0]}")
    pts, D = space.points, space.dist
    rep: dict[str, str] = {}
    reps: list[int] = []
    for i, p in enumerate(pts):
        for r in reps:
            if D[i][r] == 0:
                rep[p] = pts[r]
                break
        else:
            reps.append(i)
            rep[p] = p
    q = FiniteMetricSpace(
        tuple(pts[i] for i in reps), tuple(tuple(D[i][j] for j in reps) for i in reps)
    )
    return q, rep
