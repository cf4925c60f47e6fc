"""Criteria recognising an inductive limit of interval algebras as UHF of type nu."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from ..extq import StructuralError
from .core import (
    CubeAlgebra,
    DiagonalMorphism,
    SupernaturalNumber,
    compose_diagonal,
    divides,
    identity_morphism,
    max_image_diameter,
    subdivision_morphism,
)
from .pwa import PiecewiseAffineMap


@dataclass
class UHFLimitReport:
    a: bool
    b: bool
    c: bool
    missing_divisors: list[int] = field(default_factory=list)
    fine_witness: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.a and self.b and self.c

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "ok": self.ok,
            "missing_divisors": self.missing_divisors,
            "fine_witness": {f"{j}@{e}": k for (j, e), k in sorted(self.fine_witness.items())},
            "notes": self.notes,
        }


def _validate_chain(chain: Sequence[DiagonalMorphism]):
    if not chain:
        raise StructuralError("empty chain")
    for j, (f, g) in enumerate(zip(chain, chain[1:])):
        if f.target != g.source:
            raise StructuralError(f"morphism {j} does not compose with morphism {j + 1}")


def check_uhf_limit(chain: Sequence[DiagonalMorphism], nu: SupernaturalNumber, depth: Optional[int] = None,
                    eps_schedule: Sequence = (Fraction(1, 2), Fraction(1, 8), Fraction(1, 64)),
                    n_bound: int = 64) -> UHFLimitReport:
    """(a) every cube has p >= 1; (b) each n <= n_bound dividing nu divides some n_j;
    (c) for each j < depth and eps in the schedule some composite j -> k has
    all image diameters below eps.

    The chain is a list of morphisms A_0 -> A_1 -> ...; for (c) it must run
    far enough past ``depth`` for the composites to get fine.
    """
    _validate_chain(chain)
    algebras = [chain[0].source] + [f.target for f in chain]
    depth = len(chain) if depth is None else depth
    notes = []
    a = all(A.p >= 1 for A in algebras)
    sizes = [A.n for A in algebras]
    for n in sizes:
        if not divides(n, nu):
            notes.append(f"matrix size {n} does not divide {nu}")
    missing = [n for n in range(1, n_bound + 1) if divides(n, nu) and not any(nj % n == 0 for nj in sizes)]
    b = not missing and not notes
    witness = {}
    eps_list = sorted((Fraction(e) for e in eps_schedule), reverse=True)
    for j in range(min(depth, len(chain))):
        comp = None
        k = j
        for eps in eps_list:
            while comp is None or max_image_diameter(comp) >= eps:
                if k >= len(chain):
                    break
                comp = chain[k] if comp is None else compose_diagonal(chain[k], comp)
                k += 1
            found = comp is not None and max_image_diameter(comp) < eps
            witness[(j, str(eps))] = k if found else None
    c = all(v is not None for v in witness.values())
    return UHFLimitReport(a, b, c, missing, witness, notes)


def canonical_chain(length: int, m: int = 2) -> list[DiagonalMorphism]:
    """A_{1,m^j} -> A_{1,m^(j+1)} by m-fold subdivision."""
    return [subdivision_morphism(m ** j, m) for j in range(length)]


def identity_chain(length: int, n: int = 1) -> list[DiagonalMorphism]:
    return [identity_morphism(CubeAlgebra(1, n))] * length


def step_hat(c: int, d: int, N: int) -> PiecewiseAffineMap:
    """Trapezoid: 0 off [(c-1)/N, (d+1)/N], 1 on [c/N, d/N], slopes +-N between."""
    if not (0 <= c < d <= N):
        raise ValueError("need 0 <= c < d <= N")

    def f(t):
        return max(Fraction(0), min(Fraction(1), N * t - c + 1, -N * t + d + 1))

    xs = sorted({Fraction(0), Fraction(1)} | {x for x in (Fraction(c - 1, N), Fraction(c, N), Fraction(d, N),
                                                          Fraction(d + 1, N)) if 0 < x < 1})
    return PiecewiseAffineMap.from_points(xs, [f(x) for x in xs])


def step_hat_integral(c: int, d: int, N: int) -> Fraction:
    """Trapezoid area by hand: plateau plus two ramp triangles of area 1/(2N).

    A ramp falls entirely outside [0,1] when c = 0 or d = N.
    """
    area = Fraction(d - c, N) + Fraction(1, N)
    if c == 0:
        area -= Fraction(1, 2 * N)
    if d == N:
        area -= Fraction(1, 2 * N)
    return area
