"""Finite metric structures, embeddings and the built-in Fraisse categories.

Objects of the built-in categories carry no symbols, so a structure is
just its metric domain; the generic machinery (signatures, generated
substructures, embedding checks) is still exercised by the tests.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Iterator, Mapping, Sequence

from . import apx
from .apx import ApproximateIsometry
from .extq import FiniteMetricSpace, StructuralError, to_rational, validate_metric, violations_involving


@dataclass(frozen=True)
class Signature:
    functions: tuple[tuple[str, int], ...] = ()
    relations: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        names = [n for n, _ in self.functions] + [n for n, _ in self.relations]
        if len(set(names)) != len(names):
            raise StructuralError("symbol names must be unique")

    def arity(self, name: str) -> int:
        for n, k in self.functions + self.relations:
            if n == name:
                return k
        raise StructuralError(f"unknown symbol {name!r}")


EMPTY = Signature()


@dataclass(frozen=True, eq=False)
class FinStructure:
    """A finite metric structure.

    ``relations[R]`` maps argument tuples to rationals and ``functions[f]``
    maps argument tuples to points; both must be total on the domain.
    """

    domain: FiniteMetricSpace
    signature: Signature = EMPTY
    relations: Mapping[str, Mapping[tuple, Fraction]] = field(default_factory=dict)
    functions: Mapping[str, Mapping[tuple, str]] = field(default_factory=dict)

    def __post_init__(self):
        pts = self.domain.points
        for name, k in self.signature.functions:
            table = self.functions.get(name)
            if table is None:
                raise StructuralError(f"function {name!r} not interpreted")
            for args in product(pts, repeat=k):
                if args not in table:
                    raise StructuralError(f"{name}{args} undefined")
                if table[args] not in self.domain:
                    raise StructuralError(f"{name}{args} leaves the domain")
        for name, k in self.signature.relations:
            table = self.relations.get(name)
            if table is None:
                raise StructuralError(f"relation {name!r} not interpreted")
            for args in product(pts, repeat=k):
                if args not in table:
                    raise StructuralError(f"{name}{args} undefined")

    @property
    def points(self) -> tuple[str, ...]:
        return self.domain.points

    def __len__(self):
        return len(self.domain)

    def __eq__(self, other):
        if not isinstance(other, FinStructure):
            return NotImplemented
        return (self.domain, self.signature, _freeze(self.relations), _freeze(self.functions)) == (
            other.domain, other.signature, _freeze(other.relations), _freeze(other.functions))

    def __hash__(self):
        return hash((self.domain.points, self.domain.dist))

    @classmethod
    def metric(cls, space: FiniteMetricSpace) -> "FinStructure":
        return cls(space)


def _freeze(tables):
    return tuple(sorted((k, tuple(sorted(v.items()))) for k, v in tables.items()))


@dataclass(frozen=True)
class EmbeddingMap:
    source: FinStructure
    target: FinStructure
    mapping: Mapping[str, str]


def validate_embedding(e: EmbeddingMap) -> bool:
    """Isometric, injective, and preserving every relation and function."""
    s, t, f = e.source, e.target, e.mapping
    if s.signature != t.signature:
        raise StructuralError("signatures differ")
    if not apx.is_isometric(s.domain, t.domain, f):
        return False
    if len(set(f[p] for p in s.points)) != len(s):
        return False
    for name, k in s.signature.relations:
        for args in product(s.points, repeat=k):
            if s.relations[name][args] != t.relations[name][tuple(f[a] for a in args)]:
                return False
    for name, k in s.signature.functions:
        for args in product(s.points, repeat=k):
            if f[s.functions[name][args]] != t.functions[name][tuple(f[a] for a in args)]:
                return False
    return True


def generated_substructure(s: FinStructure, E) -> FinStructure:
    """Smallest function-closed subset containing ``E``, with induced tables."""
    closed = list(dict.fromkeys(E))
    for p in closed:
        s.domain.index(p)
    seen = set(closed)
    changed = True
    while changed:
        changed = False
        for name, k in s.signature.functions:
            for args in product(list(closed), repeat=k):
                v = s.functions[name][args]
                if v not in seen:
                    seen.add(v)
                    closed.append(v)
                    changed = True
    order = [p for p in s.points if p in seen]
    rel = {
        name: {a: s.relations[name][a] for a in product(order, repeat=k)}
        for name, k in s.signature.relations
    }
    fun = {
        name: {a: s.functions[name][a] for a in product(order, repeat=k)}
        for name, k in s.signature.functions
    }
    return FinStructure(s.domain.subspace(order), s.signature, rel, fun)


@dataclass(frozen=True)
class PointedObject:
    """An object together with an ordered tuple of generators."""

    obj: FinStructure
    tuple: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tuple", tuple(self.tuple))
        if set(generated_substructure(self.obj, self.tuple).points) != set(self.obj.points):
            raise StructuralError("tuple does not generate the object")


# --- embeddings between plain metric objects --------------------------------


class SearchBudgetExceeded(RuntimeError):
    pass


def isometric_embeddings(
    A: FiniteMetricSpace, B: FiniteMetricSpace, partial: Mapping[str, str] | None = None,
    allowed=None, bijective: bool = False, node_budget: int | None = None,
) -> Iterator[dict[str, str]]:
    """All injective isometries A -> B extending ``partial``.

    Backtracking over candidate sets, most constrained point first, with
    forward checking. ``allowed(a, b)`` may restrict each image;
    ``bijective`` adds distance-profile pruning (A and B the same size).
    Raises :class:`SearchBudgetExceeded` after ``node_budget`` nodes.
    """
    base = dict(partial or {})
    if len(set(base.values())) != len(base) or not apx.is_isometric(A.subspace(base), B, base):
        return
    if bijective and len(A) != len(B):
        return
    prof_b = {b: sorted(B.dist[B.index(b)]) for b in B.points} if bijective else None
    cands: dict[str, list[str]] = {}
    used = set(base.values())
    for a in A.points:
        if a in base:
            continue
        ia = A.index(a)
        pa = sorted(A.dist[ia]) if bijective else None
        cs = [
            b for b in B.points
            if b not in used
            and (allowed is None or allowed(a, b))
            and (pa is None or prof_b[b] == pa)
            and all(A.dist[ia][A.index(x)] == B.d(b, y) for x, y in base.items())
        ]
        if not cs:
            return
        cands[a] = cs
    nodes = 0

    def rec(cur, cands):
        nonlocal nodes
        if not cands:
            yield dict(cur)
            return
        nodes += 1
        if node_budget is not None and nodes > node_budget:
            raise SearchBudgetExceeded(f"embedding search exceeded {node_budget} nodes")
        a = min(cands, key=lambda x: len(cands[x]))
        ia = A.index(a)
        rest = [x for x in cands if x != a]
        for b in cands[a]:
            ib = B.index(b)
            nxt = {}
            for x in rest:
                dx = A.dist[ia][A.index(x)]
                cs = [y for y in cands[x] if y != b and B.dist[ib][B.index(y)] == dx]
                if not cs:
                    break
                nxt[x] = cs
            else:
                cur[a] = b
                yield from rec(cur, nxt)
                del cur[a]

    yield from rec(dict(base), cands)


def find_embedding(A, B, partial=None, allowed=None, bijective=False, node_budget=None) -> dict[str, str] | None:
    return next(isometric_embeddings(A, B, partial, allowed, bijective, node_budget), None)


# --- categories ---------------------------------------------------------------


@dataclass
class Amalgam:
    """An object with embeddings of the two inputs."""

    ambient: FinStructure
    left: dict[str, str]
    right: dict[str, str]


class Category:
    """Interface the engine drives. Objects are :class:`FinStructure` values.

    Subclasses implement ``is_object``, ``sample_object``, ``jep``,
    ``realize`` (glue along a realizable cross table) and the finite
    enumerations used by the request schedule.
    """

    name = "abstract"
    #: cross-table values used when enumerating requests
    exact = False

    def is_object(self, s: FinStructure) -> bool:
        raise NotImplementedError

    def is_morphism(self, e: EmbeddingMap) -> bool:
        return self.is_object(e.source) and self.is_object(e.target) and validate_embedding(e)

    def sample_object(self, rng: random.Random, size: int) -> FinStructure:
        raise NotImplementedError

    def jep(self, A: FinStructure, B: FinStructure) -> Amalgam:
        raise NotImplementedError

    def is_realizable(self, theta: ApproximateIsometry) -> bool:
        """True iff some object jointly embeds both sides with exactly these distances."""
        raise NotImplementedError

    def glue_table(self, S: FinStructure, theta: ApproximateIsometry) -> ApproximateIsometry:
        """Cross distances A x S for the canonical amalgam of S with A along theta."""
        raise NotImplementedError

    def value_grid(self, level: int) -> list[Fraction]:
        raise NotImplementedError

    def values_ok(self, space: FiniteMetricSpace, rows) -> bool:
        """Category-specific distance constraints on the given rows."""
        return True

    def pointed_objects(self) -> Iterator[PointedObject]:
        raise NotImplementedError

    # shared machinery

    def realize(self, S: FinStructure, theta: ApproximateIsometry, fresh: str) -> tuple[FinStructure, dict[str, str]]:
        """Extend S by a copy of theta's source so that the copy realizes theta.

        The points of S keep their names; new points are ``fresh + name``.
        Returns the new object and the embedding of theta's source.
        """
        if not self.is_realizable(theta):
            raise StructuralError("cross table is not realizable in this category")
        cross = self.glue_table(S, theta)
        A = theta.source
        Sd = S.domain
        emb: dict[str, str] = {}
        added: list[str] = []
        for i, a in enumerate(A.points):
            zero = [s for j, s in enumerate(Sd.points) if cross.values[i][j] == 0]
            if zero:
                if any(cross.values[i][j] != Sd.dist[Sd.index(zero[0])][j] for j in range(len(Sd))):
                    raise StructuralError("inconsistent identification in cross table")
                emb[a] = zero[0]
            else:
                emb[a] = fresh + a
                added.append(a)
        row = {a: cross.values[A.index(a)] for a in added}
        names = Sd.points + tuple(emb[a] for a in added)
        n0 = len(Sd)

        def d(i, j):
            if i < n0 and j < n0:
                return Sd.dist[i][j]
            if i >= n0 and j >= n0:
                return A.d(added[i - n0], added[j - n0])
            if i >= n0:
                return row[added[i - n0]][j]
            return row[added[j - n0]][i]

        n = len(names)
        amb = FiniteMetricSpace(names, tuple(tuple(d(i, j) for j in range(n)) for i in range(n)))
        if violations_involving(amb, range(n0, n)) or not self.values_ok(amb, range(n0, n)):
            raise StructuralError("glued space is not an object of the category")
        for a in A.points:
            for b in A.points:
                if amb.d(emb[a], emb[b]) != A.d(a, b):
                    raise StructuralError("glued copy is not isometric")
        return FinStructure.metric(amb), emb

    def nap(self, A: FinStructure, B: FinStructure, C: FinStructure, f: Mapping[str, str],
            g: Mapping[str, str], fresh: str = "c:") -> Amalgam:
        """Amalgamate f: A -> B and g: A -> C exactly over A."""
        pts = list(A.points)
        Ap = C.domain.subspace([g[a] for a in pts])
        Bp = B.domain.subspace([f[a] for a in pts])
        # g(a) sits at distance d_A(a, a') from f(a'); extend to all of C
        core = ApproximateIsometry(Ap, Bp, tuple(tuple(A.domain.d(a, b) for b in pts) for a in pts))
        theta = apx.trivial_extension(core, C.domain, Bp)
        D, emb = self.realize(B, theta, fresh)
        return Amalgam(D, {b: b for b in B.points}, emb)

    def cross_tables(self, A: FiniteMetricSpace, F: FiniteMetricSpace, level: int) -> Iterator[ApproximateIsometry]:
        """Realizable tables A x F with values on the level's grid (lazy)."""
        grid = self.value_grid(level)
        nA, nF = len(A), len(F)
        DA, DF = A.dist, F.dist
        vals: list = [None] * (nA * nF)

        def fits(i, j, v):
            # pairwise Katetov inequalities against cells already placed
            for i2 in range(i):
                w, d = vals[i2 * nF + j], DA[i][i2]
                if abs(v - w) > d or d > v + w:
                    return False
            for j2 in range(j):
                w, d = vals[i * nF + j2], DF[j][j2]
                if abs(v - w) > d or d > v + w:
                    return False
            return True

        def fill(c):
            if c == nA * nF:
                yield tuple(tuple(vals[i * nF:(i + 1) * nF]) for i in range(nA))
                return
            i, j = divmod(c, nF)
            for v in grid:
                if fits(i, j, v):
                    vals[c] = v
                    yield from fill(c + 1)

        # same order as filtering the full product, without visiting dead prefixes
        for rows in fill(0):
            theta = ApproximateIsometry(A, F, rows)
            if self.is_realizable(theta):
                yield theta


def _graph_metric(space: FiniteMetricSpace) -> bool:
    return all(
        v in (1, 2) for i, r in enumerate(space.dist) for j, v in enumerate(r) if i != j
    )


class FinGraphCat(Category):
    """Finite simple graphs as metric spaces: edge = 1, non-edge = 2."""

    name = "graphs"
    exact = True

    def is_object(self, s):
        return _graph_metric(s.domain) and not validate_metric(s.domain)

    @staticmethod
    def from_edges(vertices: Sequence[str], edges) -> FinStructure:
        E = {frozenset(e) for e in edges}
        return FinStructure.metric(FiniteMetricSpace.from_function(
            vertices, lambda a, b: 0 if a == b else (1 if frozenset((a, b)) in E else 2)))

    @staticmethod
    def edges(s: FinStructure) -> list[tuple[str, str]]:
        return [(a, b) for a, b in combinations(s.points, 2) if s.domain.d(a, b) == 1]

    def sample_object(self, rng, size):
        vs = [f"v{i}" for i in range(size)]
        return self.from_edges(vs, [e for e in combinations(vs, 2) if rng.random() < 0.5])

    def jep(self, A, B):
        return _disjoint(A, B, Fraction(2))

    def values_ok(self, space, rows):
        return all(v in (1, 2) for i in rows for j, v in enumerate(space.dist[i]) if j != i)

    def is_realizable(self, theta):
        if not theta.is_finite() or any(v not in (0, 1, 2) for v in theta.entries()):
            return False
        if not apx.validate_apx(theta):
            return False
        return _graph_metric(apx.amalgamate(theta).ambient)

    def glue_table(self, S, theta):
        A, F = theta.source, theta.target
        rows = []
        for a in A.points:
            same = [f for f in F.points if theta(a, f) == 0]
            if same:
                rows.append(tuple(S.domain.d(same[0], s) for s in S.points))
            else:
                rows.append(tuple(theta(a, s) if s in F else Fraction(2) for s in S.points))
        return ApproximateIsometry(A, S.domain, tuple(rows))

    def value_grid(self, level):
        return [Fraction(0), Fraction(1), Fraction(2)]

    def pointed_objects(self):
        # one vertex, then an edge and a non-edge, then the 3-vertex graphs
        yield PointedObject(self.from_edges(["a"], []), ("a",))
        for n in (2, 3):
            vs = [f"a{i}" for i in range(n)]
            pairs = list(combinations(vs, 2))
            for mask in range(2 ** len(pairs)):
                es = [p for k, p in enumerate(pairs) if mask >> k & 1]
                yield PointedObject(self.from_edges(vs, es), tuple(vs))


class RatMetricCat(Category):
    """Finite metric spaces with distances in (1/q)Z, sampled up to ``max_value``."""

    name = "metrics"

    def __init__(self, denominator: int = 4, max_value=1):
        self.q = int(denominator)
        self.max_value = to_rational(max_value)

    def is_object(self, s):
        return not validate_metric(s.domain) and all(
            (v * self.q).denominator == 1 for r in s.domain.dist for v in r)

    def sample_object(self, rng, size):
        top = int(self.max_value * self.q)
        while True:
            vs = [f"v{i}" for i in range(size)]
            D = {}
            for a, b in combinations(range(size), 2):
                D[a, b] = D[b, a] = Fraction(rng.randint(1, top), self.q)
            sp = FiniteMetricSpace.from_function(
                vs, lambda x, y: 0 if x == y else D[vs.index(x), vs.index(y)])
            if not validate_metric(sp):
                return FinStructure.metric(sp)

    def jep(self, A, B):
        # constant cross distance; max(1, diameters) keeps the triangle inequality
        c = max(Fraction(1), A.domain.diameter(), B.domain.diameter())
        return _disjoint(A, B, c)

    def is_realizable(self, theta):
        if not theta.is_finite() or not apx.validate_apx(theta):
            return False
        return all((v * self.q).denominator == 1 for v in theta.entries())

    def values_ok(self, space, rows):
        return all((v * self.q).denominator == 1 for i in rows for v in space.dist[i])

    def glue_table(self, S, theta):
        return apx.trivial_extension(theta, theta.source, S.domain)

    def value_grid(self, level):
        # level L: multiples of 1/q up to (L + 1) * max_value
        top = int((level + 1) * self.max_value * self.q)
        return [Fraction(k, self.q) for k in range(top + 1)]

    def pointed_objects(self):
        yield PointedObject(FinStructure.metric(FiniteMetricSpace.single("a")), ("a",))
        top = int(self.max_value * self.q)
        for k in range(1, top + 1):
            sp = FiniteMetricSpace(("a0", "a1"), ((0, Fraction(k, self.q)), (Fraction(k, self.q), 0)))
            yield PointedObject(FinStructure.metric(sp), ("a0", "a1"))


def _disjoint(A: FinStructure, B: FinStructure, c: Fraction) -> Amalgam:
    pts = [f"l:{a}" for a in A.points] + [f"r:{b}" for b in B.points]
    na = len(A)

    def d(i, j):
        if i < na and j < na:
            return A.domain.dist[i][j]
        if i >= na and j >= na:
            return B.domain.dist[i - na][j - na]
        return c

    n = len(pts)
    amb = FiniteMetricSpace(tuple(pts), tuple(tuple(d(i, j) for j in range(n)) for i in range(n)))
    return Amalgam(
        FinStructure.metric(amb),
        {a: f"l:{a}" for a in A.points},
        {b: f"r:{b}" for b in B.points},
    )


CATEGORIES = {"graphs": FinGraphCat, "metrics": RatMetricCat}


def get_category(name: str, **kw) -> Category:
    try:
        return CATEGORIES[name](**kw)
    except KeyError:
        raise StructuralError(f"unknown category {name!r}; choose from {sorted(CATEGORIES)}") from None


def all_partial_isometries(A: FiniteMetricSpace, B: FiniteMetricSpace) -> Iterator[dict[str, str]]:
    """Every injective partial isometry A -> B (including the empty one)."""
    for k in range(min(len(A), len(B)) + 1):
        for dom in combinations(A.points, k):
            for img in permutations(B.points, k):
                f = dict(zip(dom, img))
                if apx.is_isometric(A.subspace(dom), B, f):
                    yield f
