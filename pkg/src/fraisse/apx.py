"""Approximate isometries between finite metric spaces.

An approximate isometry from X to Y is a table X x Y -> [0, inf] that is
Katetov in each variable separately. Tables are indexed by point position;
all arithmetic is exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .extq import (
    INF,
    ExtQ,
    FiniteMetricSpace,
    StructuralError,
    extq_min,
    quotient,
    to_extq,
    to_rational,
    validate_metric,
)


class DominationError(ValueError):
    """A strict-domination precondition does not hold."""


class NoFiniteAmalgam(ValueError):
    pass


Table = tuple[tuple[ExtQ, ...], ...]


def is_katetov(space: FiniteMetricSpace, f) -> bool:
    """Both Katetov inequalities for ``f`` given as a mapping or a sequence."""
    vals = _as_vector(space, f)
    D = space.dist
    n = len(vals)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if vals[i] > D[i][j] + vals[j]:
                return False
            if D[i][j] > vals[i] + vals[j]:
                return False
    return True


def _as_vector(space: FiniteMetricSpace, f) -> list[ExtQ]:
    if isinstance(f, Mapping):
        missing = [p for p in space.points if p not in f]
        if missing:
            raise StructuralError(f"function undefined at {missing}")
        return [to_extq(f[p]) for p in space.points]
    vals = [to_extq(v) for v in f]
    if len(vals) != len(space):
        raise StructuralError("function length does not match the space")
    return vals


@dataclass(frozen=True)
class ApproximateIsometry:
    source: FiniteMetricSpace
    target: FiniteMetricSpace
    values: Table

    def __post_init__(self):
        rows = tuple(tuple(to_extq(v) for v in row) for row in self.values)
        if len(rows) != len(self.source) or any(len(r) != len(self.target) for r in rows):
            raise StructuralError(
                f"value table must be {len(self.source)}x{len(self.target)}"
            )
        object.__setattr__(self, "values", rows)

    def __call__(self, x: str, y: str) -> ExtQ:
        return self.values[self.source.index(x)][self.target.index(y)]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.source), len(self.target)

    def entries(self) -> Iterable[ExtQ]:
        for row in self.values:
            yield from row

    def is_all_inf(self) -> bool:
        return all(v is INF for v in self.entries())

    def is_finite(self) -> bool:
        return all(v is not INF for v in self.entries())

    def __le__(self, other: "ApproximateIsometry") -> bool:
        _same_spaces(self, other)
        return all(a <= b for a, b in zip(self.entries(), other.entries()))

    def __repr__(self):
        return f"ApproximateIsometry({list(self.source.points)} -> {list(self.target.points)})"


def _same_spaces(a: ApproximateIsometry, b: ApproximateIsometry):
    if a.source != b.source or a.target != b.target:
        raise StructuralError("approximate isometries live on different spaces")


def constant(source: FiniteMetricSpace, target: FiniteMetricSpace, c) -> ApproximateIsometry:
    c = to_extq(c)
    return ApproximateIsometry(
        source, target, tuple((c,) * len(target) for _ in source.points)
    )


def all_inf(source, target) -> ApproximateIsometry:
    return constant(source, target, INF)


def identity(space: FiniteMetricSpace) -> ApproximateIsometry:
    """The approximate isometry of the identity map, i.e. the distance table."""
    return ApproximateIsometry(space, space, space.dist)


def katetov_violations(phi: ApproximateIsometry) -> list[tuple[str, str, str, str]]:
    """(kind, fixed point, p, q) for each failed inequality in a row or column."""
    out = []
    X, Y, V = phi.source, phi.target, phi.values
    for j, y in enumerate(Y.points):
        col = [V[i][j] for i in range(len(X))]
        out.extend(("column", y, a, b) for a, b in _kat_failures(X, col))
    for i, x in enumerate(X.points):
        out.extend(("row", x, a, b) for a, b in _kat_failures(Y, V[i]))
    return out


def _kat_failures(space, vals):
    D = space.dist
    pts = space.points
    for i in range(len(vals)):
        for j in range(len(vals)):
            if i != j and (vals[i] > D[i][j] + vals[j] or D[i][j] > vals[i] + vals[j]):
                yield pts[i], pts[j]


def validate_apx(phi: ApproximateIsometry) -> bool:
    return not katetov_violations(phi)


@dataclass(frozen=True)
class JointEmbeddingWitness:
    """Isometric injections of ``source`` and ``target`` into ``ambient``."""

    source: FiniteMetricSpace
    target: FiniteMetricSpace
    ambient: FiniteMetricSpace
    iota: Mapping[str, str]
    eta: Mapping[str, str]

    def is_valid(self) -> bool:
        return is_isometric(self.source, self.ambient, self.iota) and is_isometric(
            self.target, self.ambient, self.eta
        )


def is_isometric(src: FiniteMetricSpace, dst: FiniteMetricSpace, f: Mapping[str, str]) -> bool:
    if any(p not in f or f[p] not in dst for p in src.points):
        return False
    return all(
        src.d(a, b) == dst.d(f[a], f[b]) for a in src.points for b in src.points
    )


def from_joint_embedding(w: JointEmbeddingWitness) -> ApproximateIsometry:
    Z = w.ambient
    return ApproximateIsometry(
        w.source,
        w.target,
        tuple(
            tuple(Z.d(w.iota[x], w.eta[y]) for y in w.target.points)
            for x in w.source.points
        ),
    )


def from_isometry(src: FiniteMetricSpace, dst: FiniteMetricSpace, f: Mapping[str, str]) -> ApproximateIsometry:
    """The approximate isometry (x, y) -> d(f(x), y) of an isometry ``f``."""
    return ApproximateIsometry(
        src, dst, tuple(tuple(dst.d(f[x], y) for y in dst.points) for x in src.points)
    )


def adjoint(phi: ApproximateIsometry) -> ApproximateIsometry:
    return ApproximateIsometry(
        phi.target, phi.source, tuple(zip(*phi.values)) if phi.values else
        tuple(() for _ in phi.target.points),
    )


def compose(psi: ApproximateIsometry, phi: ApproximateIsometry) -> ApproximateIsometry:
    """Min-plus product: (psi phi)(x, z) = min over y of phi(x, y) + psi(y, z)."""
    if phi.target != psi.source:
        raise StructuralError(
            "middle spaces differ: "
            f"{list(phi.target.points)} vs {list(psi.source.points)}"
        )
    ny = len(phi.target)
    P, Q = phi.values, psi.values
    out = []
    for row in P:
        new_row = []
        for k in range(len(psi.target)):
            best: ExtQ = INF
            for j in range(ny):
                s = row[j] + Q[j][k]
                if s < best:
                    best = s
            new_row.append(best)
        out.append(tuple(new_row))
    return ApproximateIsometry(phi.source, psi.target, tuple(out))


def restrict(phi: ApproximateIsometry, xs: Sequence[str], ys: Sequence[str]) -> ApproximateIsometry:
    X0 = phi.source.subspace(xs)
    Y0 = phi.target.subspace(ys)
    I = [phi.source.index(x) for x in X0.points]
    J = [phi.target.index(y) for y in Y0.points]
    return ApproximateIsometry(
        X0, Y0, tuple(tuple(phi.values[i][j] for j in J) for i in I)
    )


def trivial_extension(
    psi: ApproximateIsometry, X: FiniteMetricSpace, Y: FiniteMetricSpace
) -> ApproximateIsometry:
    """Largest approximate isometry on X x Y whose restriction is ``psi``.

    ``psi`` must live on subspaces of X and Y (same names, same distances).
    """
    for sub, big in ((psi.source, X), (psi.target, Y)):
        for a in sub.points:
            for b in sub.points:
                if big.d(a, b) != sub.d(a, b):
                    raise StructuralError("not a subspace: distances disagree")
    I = [X.index(x) for x in psi.source.points]
    J = [Y.index(y) for y in psi.target.points]
    V = psi.values
    # min over y' first, then over x'
    through = [
        [extq_min(V[a][b] + Y.dist[J[b]][y] for b in range(len(J))) for y in range(len(Y))]
        for a in range(len(I))
    ]
    out = tuple(
        tuple(
            extq_min(X.dist[x][I[a]] + through[a][y] for a in range(len(I)))
            for y in range(len(Y))
        )
        for x in range(len(X))
    )
    return ApproximateIsometry(X, Y, out)


def relax(phi: ApproximateIsometry, eps) -> ApproximateIsometry:
    eps = to_rational(eps)
    return ApproximateIsometry(
        phi.source, phi.target, tuple(tuple(v + eps for v in row) for row in phi.values)
    )


def amalgamate(
    phi: ApproximateIsometry, left: str = "x:", right: str = "y:"
) -> JointEmbeddingWitness:
    """Realize a finite-valued approximate isometry by a joint embedding.

    Glues X and Y along ``phi`` into a pseudo-metric on the disjoint union and
    quotients it; the returned witness satisfies d(iota x, eta y) = phi(x, y).
    """
    if phi.values and phi.values[0] and phi.is_all_inf():
        raise NoFiniteAmalgam("no finite amalgam for the all-infinite approximate isometry")
    X, Y = phi.source, phi.target
    names = [left + x for x in X.points] + [right + y for y in Y.points]
    nx = len(X)
    n = len(names)

    def delta(i, j):
        if i < nx and j < nx:
            return X.dist[i][j]
        if i >= nx and j >= nx:
            return Y.dist[i - nx][j - nx]
        if i < nx:
            return phi.values[i][j - nx]
        return phi.values[j][i - nx]

    pseudo = FiniteMetricSpace(
        tuple(names), tuple(tuple(delta(i, j) for j in range(n)) for i in range(n))
    )
    ambient, proj = quotient(pseudo)
    iota = {x: proj[left + x] for x in X.points}
    eta = {y: proj[right + y] for y in Y.points}
    return JointEmbeddingWitness(X, Y, ambient, iota, eta)


# --- totality ---------------------------------------------------------------


def totality_defect_star(phi: ApproximateIsometry) -> ExtQ:
    """Least eps with phi* phi <= phi_id + 2 eps, from the composite table."""
    X = phi.source
    pp = compose(adjoint(phi), phi)
    worst: ExtQ = Fraction(0)
    for i in range(len(X)):
        for j in range(len(X)):
            v = pp.values[i][j]
            gap = INF if v is INF else v - X.dist[i][j]
            if gap > worst:
                worst = gap
    return INF if worst is INF else worst / 2


def totality_defect_maxmin(phi: ApproximateIsometry) -> ExtQ:
    """max over x of min over y of phi(x, y)."""
    worst: ExtQ = Fraction(0)
    for row in phi.values:
        m = extq_min(row)
        if m > worst:
            worst = m
    return worst


def totality_defect(phi: ApproximateIsometry) -> ExtQ:
    a = totality_defect_star(phi)
    b = totality_defect_maxmin(phi)
    if a != b:
        raise ArithmeticError(f"totality defects disagree: {a} vs {b}")
    return a


def surjectivity_defect(phi: ApproximateIsometry) -> ExtQ:
    return totality_defect(adjoint(phi))


def is_epsilon_total(phi: ApproximateIsometry, eps) -> bool:
    return totality_defect(phi) <= to_rational(eps)


def is_epsilon_surjective(phi: ApproximateIsometry, eps) -> bool:
    return surjectivity_defect(phi) <= to_rational(eps)


def is_epsilon_bijective(phi: ApproximateIsometry, eps) -> bool:
    return is_epsilon_total(phi, eps) and is_epsilon_surjective(phi, eps)


def as_bijection(phi: ApproximateIsometry) -> dict[str, str] | None:
    """The bijective isometry behind a 0-bijective finite table, else None."""
    if not phi.is_finite() or not is_epsilon_bijective(phi, 0):
        return None
    alpha = {}
    for i, x in enumerate(phi.source.points):
        zeros = [phi.target.points[j] for j, v in enumerate(phi.values[i]) if v == 0]
        if len(zeros) != 1:
            return None
        alpha[x] = zeros[0]
    if len(set(alpha.values())) != len(phi.target):
        return None
    return alpha


# --- strict domination ------------------------------------------------------


def domination_gap(phi: ApproximateIsometry, psi: ApproximateIsometry) -> ExtQ | None:
    """min of phi - psi over finite entries of psi; None if psi + eps <= phi fails
    for every eps > 0 (some gap is zero or negative, or psi = inf < phi)."""
    _same_spaces(phi, psi)
    gap: ExtQ = INF
    for a, b in zip(phi.entries(), psi.entries()):
        if b is INF:
            if a is not INF:
                return None
            continue
        if a is INF:
            continue
        d = a - b
        if d <= 0:
            return None
        if d < gap:
            gap = d
    return gap


def strictly_dominates(phi: ApproximateIsometry, psi: ApproximateIsometry) -> bool:
    """True iff psi is strictly dominated by phi (psi + eps <= phi for some eps > 0)."""
    return domination_gap(phi, psi) is not None


def _dyadic_inside(upper: Fraction) -> Fraction:
    """Dyadic rational in (0, upper) with least power-of-two denominator,
    nearest to upper/2 (ties go down)."""
    k = 0
    while Fraction(1, 2**k) >= upper:
        k += 1
    den = 2**k
    mid = upper / 2
    lo = max(1, (mid * den).__floor__())
    best = None
    for j in (lo, lo + 1):
        c = Fraction(j, den)
        if 0 < c < upper and (best is None or abs(c - mid) < abs(best - mid)):
            best = c
    return best


def strict_interpolant(phi: ApproximateIsometry, psi: ApproximateIsometry) -> ApproximateIsometry:
    """A rational approximate isometry rho with psi strictly below rho strictly below phi.

    Works level set by level set of ``psi``: the perturbation grows with the
    level and stays below each gap between consecutive levels, which keeps
    every row and column Katetov.
    """
    gap = domination_gap(phi, psi)
    if gap is None:
        raise DominationError("psi is not strictly dominated by phi")
    if not psi.is_finite():
        raise DominationError("psi must be finite-valued")
    if not psi.values or not psi.values[0]:
        return psi
    eps = Fraction(1) if gap is INF else gap / 2
    levels = sorted(set(psi.entries()))
    n = len(levels)
    delta: dict[Fraction, Fraction] = {}
    for i in range(n - 1, -1, -1):
        ub = eps
        if i < n - 1:
            ub = min(ub, delta[levels[i + 1]])
        if i > 0:
            ub = min(ub, levels[i] - levels[i - 1])
        elif levels[0] > 0:
            ub = min(ub, levels[0])
        delta[levels[i]] = _dyadic_inside(ub)
    rho = ApproximateIsometry(
        psi.source,
        psi.target,
        tuple(tuple(v - delta[v] + eps for v in row) for row in psi.values),
    )
    if not (validate_apx(rho) and strictly_dominates(rho, psi) and strictly_dominates(phi, rho)):
        raise ArithmeticError("interpolant failed its postconditions")
    return rho


# --- perturbation -----------------------------------------------------------


class Perturbation(enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    PRECONDITION_FAILED = "precondition-failed"

    def __bool__(self):
        return self is Perturbation.HOLDS


def within(space: FiniteMetricSpace, pts: Iterable[str], centers: Sequence[str], r) -> bool:
    return all(any(space.d(p, c) <= r for c in centers) for p in pts)


def verify_perturbation(phi, X0, Y0, X0p, Y0p, eps) -> Perturbation:
    """Compare trivial extensions of two restrictions of ``phi``.

    Requires X0p, Y0p to lie within eps/5 of X0, Y0; then checks
    ext(phi|X0 x Y0) + eps/5 <= ext(phi|X0p x Y0p) + eps everywhere.
    """
    eps = to_rational(eps)
    r = eps / 5
    if not (within(phi.source, X0p, X0, r) and within(phi.target, Y0p, Y0, r)):
        return Perturbation.PRECONDITION_FAILED
    X, Y = phi.source, phi.target
    lhs = relax(trivial_extension(restrict(phi, X0, Y0), X, Y), r)
    rhs = relax(trivial_extension(restrict(phi, X0p, Y0p), X, Y), eps)
    return Perturbation.HOLDS if lhs <= rhs else Perturbation.VIOLATED


def check_realization(w: JointEmbeddingWitness, phi: ApproximateIsometry) -> bool:
    return not validate_metric(w.ambient) and w.is_valid() and from_joint_embedding(w) == phi
