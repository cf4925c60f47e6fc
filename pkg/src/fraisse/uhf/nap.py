"""Near amalgamation of two diagonal morphisms out of a common interval algebra.

Given i1: A0 -> B1 and i2: A0 -> B2, both targets are duplicated up to a
common matrix size N, subdivided m times until every composed map has
image diameter below delta/2, matched block by block, and the second side
is conjugated by the permutation realising the matching.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional

from ..engine import BudgetExhausted
from ..extq import StructuralError
from .core import (
    CubeAlgebra,
    DiagonalMorphism,
    SupernaturalNumber,
    aligned_distance,
    compose_diagonal,
    conjugate,
    divides,
    duplication,
    is_trace_preserving,
    max_image_diameter,
    normalize_to_lebesgue,
    subdivision_morphism,
)
from .hall import hall_match


class SubdivisionCapExceeded(BudgetExhausted):
    def __init__(self, required: int, cap: int):
        super().__init__(f"subdivision factor {required} needed, cap is {cap}")
        self.required = required
        self.cap = cap


@dataclass(frozen=True)
class NapResult:
    eta1: DiagonalMorphism
    eta2: DiagonalMorphism
    delta: Fraction
    m: int
    size: int
    sigma: tuple[int, ...]
    distance: Fraction

    def bound(self, lipschitz_bound) -> Fraction:
        """Generator distance bound for Lipschitz test functions."""
        return Fraction(lipschitz_bound) * self.distance


def _fine_enough(dm: DiagonalMorphism, m: int, limit: Fraction) -> bool:
    # diam <= max|slope| / m settles most maps without a sweep
    return all(t.max_slope() / m < limit or t.max_cell_diameter(m) < limit for t in dm.maps)


def _max_slope(dm: DiagonalMorphism) -> Fraction:
    return max(t.max_slope() for t in dm.maps)


def _sufficient_m(dm1, dm2, limit: Fraction, size: int, nu: SupernaturalNumber) -> int:
    """A subdivision factor that works by the slope bound diam <= slope/m."""
    slope = max(_max_slope(dm1), _max_slope(dm2))
    m = int(slope / limit) + 1
    while not divides(size * m, nu):
        m += 1
    return m


def choose_m(dm1: DiagonalMorphism, dm2: DiagonalMorphism, limit: Fraction, size: int,
             nu: SupernaturalNumber, m_cap: int) -> int:
    """Least m with size*m dividing nu and all composed images finer than ``limit``.

    The m sub-images of a map cover its image, so m > diam/limit is
    necessary; smaller m are skipped without evaluation.
    """
    diam = max(max_image_diameter(dm1), max_image_diameter(dm2))
    for m in range(int(diam / limit) + 1, m_cap + 1):
        if divides(size * m, nu) and _fine_enough(dm1, m, limit) and _fine_enough(dm2, m, limit):
            return m
    raise SubdivisionCapExceeded(_sufficient_m(dm1, dm2, limit, size, nu), m_cap)


def nap_construct(i1: DiagonalMorphism, i2: DiagonalMorphism, lipschitz_bound, eps,
                  nu: SupernaturalNumber, m_cap: int = 4096,
                  delta: Optional[Fraction] = None) -> NapResult:
    """eta1 o i1 and eta2 o i2 agree up to eps on L-Lipschitz generators.

    delta defaults to eps / (4 L), so L * 2 delta = eps / 2 < eps.
    """
    eps, L = Fraction(eps), Fraction(lipschitz_bound)
    if eps <= 0 or L <= 0:
        raise StructuralError("eps and the Lipschitz bound must be positive")
    if i1.source.p != 1 or i1.source.n != i2.source.n or i1.source.p != i2.source.p:
        raise StructuralError("morphisms must share an interval source")
    if not i1.source.is_lebesgue or not i1.target.is_lebesgue or not i2.target.is_lebesgue \
            or not i2.source.is_lebesgue:
        i1, i2 = normalize_to_lebesgue(i1), normalize_to_lebesgue(i2)
    for i in (i1, i2):
        if not divides(i.target.n, nu):
            raise StructuralError(f"target size {i.target.n} does not divide {nu}")
        if not is_trace_preserving(i):
            raise StructuralError("input morphism is not trace-preserving")
    delta = eps / (4 * L) if delta is None else Fraction(delta)
    if L * 2 * delta >= eps:
        raise StructuralError("delta too large for eps")

    size = lcm(i1.target.n, i2.target.n)
    d1 = duplication(i1.target, size // i1.target.n)
    d2 = duplication(i2.target, size // i2.target.n)
    c1, c2 = compose_diagonal(d1, i1), compose_diagonal(d2, i2)
    m = choose_m(c1, c2, delta / 2, size, nu, m_cap)
    rho = subdivision_morphism(size, m)
    eta1 = compose_diagonal(rho, d1)
    eta2p = compose_diagonal(rho, d2)
    e1, e2p = compose_diagonal(eta1, i1), compose_diagonal(eta2p, i2)

    # both tuples are trace-preserving as composites of trace-preserving maps,
    # choose_m made every image finer than delta/2, and the aligned distance
    # below re-checks every matched pair
    sigma = hall_match(e1.maps, e2p.maps, delta / 2, check_trace=False, verify=False)
    n0 = i1.source.n
    # R = p2^-1 o s o p1 where s sends block l of side 1 to block sigma(l)
    inv_p2 = {v: i for i, v in enumerate(e2p.perm)}
    R = [inv_p2[sigma[j // n0] * n0 + j % n0] for j in e1.perm]
    eta2 = conjugate(eta2p, R)
    e2 = conjugate(e2p, R)  # (Ad(R) o eta2') o i2 = Ad(R) o (eta2' o i2)

    dist, _ = aligned_distance(e1, e2)
    if dist >= 2 * delta or L * dist >= eps:
        raise AssertionError(f"aligned distance {dist} violates the bound")
    if not (is_trace_preserving(eta1) and is_trace_preserving(eta2)):
        raise AssertionError("amalgamating morphisms are not trace-preserving")
    return NapResult(eta1, eta2, delta, m, size * m, sigma, dist)
