"""Supernatural numbers, interval matrix algebras and diagonal morphisms.

A diagonal morphism A_{p,n} -> A_{p',n'} sends f to
Ad(P) diag[f o t_1, ..., f o t_k] with k = n'/n. The unitary is modelled
by a permutation P of the n' scalar indices: entry (i, i') of the image is
entry (perm[i], perm[i']) of the block diagonal matrix.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from ..extq import INF, StructuralError
from .pwa import PiecewiseAffineMap, merge_density, subdivision_maps


# --- supernatural numbers --------------------------------------------------


def factorize(n: int) -> dict[int, int]:
    if n < 1:
        raise ValueError("n must be positive")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class SupernaturalNumber:
    """Formal product of prime powers; exponents are ints or INF.

    Only finitely supported numbers are representable, so at least one
    exponent must be infinite.
    """

    exponents: tuple[tuple[int, Union[int, object]], ...]

    def __post_init__(self):
        ex = tuple(sorted((int(p), e) for p, e in dict(self.exponents).items() if e is INF or e > 0))
        for p, e in ex:
            if factorize(p) != {p: 1}:
                raise ValueError(f"{p} is not prime")
        if not any(e is INF for _, e in ex):
            raise ValueError("a supernatural number here needs an infinite exponent")
        object.__setattr__(self, "exponents", ex)

    @classmethod
    def parse(cls, s: str) -> "SupernaturalNumber":
        """Parse ``"2^inf"``, ``"2^inf*3"``, ``"2^inf*3^2"``."""
        ex: dict[int, Union[int, object]] = {}
        for term in re.split(r"[*·]", s.replace(" ", "")):
            if not term:
                continue
            base, _, e = term.partition("^")
            exp = INF if e.lower() in ("inf", "infinity", "∞") else int(e or 1)
            for p, k in factorize(int(base)).items():
                cur = ex.get(p, 0)
                ex[p] = INF if (exp is INF or cur is INF) else cur + k * exp
        return cls(tuple(ex.items()))

    def exponent(self, p: int):
        return dict(self.exponents).get(p, 0)

    def primes(self) -> list[int]:
        return [p for p, _ in self.exponents]

    def __str__(self):
        return "*".join(f"{p}^{'inf' if e is INF else e}" for p, e in self.exponents)


def divides(n: int, nu: SupernaturalNumber) -> bool:
    for p, k in factorize(n).items():
        e = nu.exponent(p)
        if e is not INF and k > e:
            return False
    return True


# --- algebras and morphisms ------------------------------------------------


@dataclass(frozen=True)
class CubeAlgebra:
    """C([0,1]^p, M_n) with the trace of alpha_* Lebesgue (alpha None = Lebesgue)."""

    p: int
    n: int
    alpha: Optional[PiecewiseAffineMap] = None

    def __post_init__(self):
        if self.p < 0 or self.n < 1:
            raise StructuralError("need p >= 0 and n >= 1")
        if self.alpha is not None:
            if self.p != 1 or not self.alpha.is_homeomorphism():
                raise StructuralError("trace descriptor must be an increasing homeomorphism of [0,1]")

    @property
    def is_lebesgue(self) -> bool:
        return self.alpha is None

    def trace_density(self):
        if self.alpha is None:
            return [(Fraction(0), Fraction(1), Fraction(1))]
        return merge_density(self.alpha.density_pieces())


@dataclass(frozen=True)
class DiagonalMorphism:
    source: CubeAlgebra
    target: CubeAlgebra
    maps: tuple[PiecewiseAffineMap, ...]
    perm: tuple[int, ...] = field(default=())

    def __post_init__(self):
        s, t = self.source, self.target
        if t.p != 1:
            raise StructuralError("targets must be interval algebras (p = 1)")
        if t.n % s.n:
            raise StructuralError(f"{s.n} does not divide {t.n}")
        k = t.n // s.n
        if len(self.maps) != k:
            raise StructuralError(f"expected {k} maps, got {len(self.maps)}")
        for m in self.maps:
            if m.dim != max(s.p, 1):
                raise StructuralError("map dimension does not match the source cube")
        perm = tuple(self.perm) or tuple(range(t.n))
        if len(perm) == k and k != t.n:
            perm = expand_block_perm(perm, s.n)
        if sorted(perm) != list(range(t.n)):
            raise StructuralError("perm must be a permutation of the target indices")
        object.__setattr__(self, "perm", perm)

    @property
    def k(self) -> int:
        return len(self.maps)

    def block_perm(self) -> Optional[tuple[int, ...]]:
        """The perm as a permutation of size-n_source blocks, if it is one."""
        return collapse_block_perm(self.perm, self.source.n)


def expand_block_perm(sigma: Sequence[int], size: int) -> tuple[int, ...]:
    return tuple(sigma[b] * size + r for b in range(len(sigma)) for r in range(size))


def collapse_block_perm(perm: Sequence[int], size: int) -> Optional[tuple[int, ...]]:
    k = len(perm) // size
    sigma = []
    for b in range(k):
        blk = perm[b * size:(b + 1) * size]
        if blk[0] % size or any(blk[r] != blk[0] + r for r in range(size)):
            return None
        sigma.append(blk[0] // size)
    return tuple(sigma)


def identity_morphism(A: CubeAlgebra) -> DiagonalMorphism:
    return DiagonalMorphism(A, A, (PiecewiseAffineMap.identity(),))


def duplication(A: CubeAlgebra, factor: int) -> DiagonalMorphism:
    """f -> diag[f, ..., f]."""
    return DiagonalMorphism(A, CubeAlgebra(A.p, A.n * factor), (PiecewiseAffineMap.identity(),) * factor)


def subdivision_morphism(n: int, m: int) -> DiagonalMorphism:
    """f -> diag[f o r_1, ..., f o r_m] from A_{1,n} to A_{1,nm}."""
    return DiagonalMorphism(CubeAlgebra(1, n), CubeAlgebra(1, n * m), subdivision_maps(m))


def conjugate(dm: DiagonalMorphism, R: Sequence[int]) -> DiagonalMorphism:
    """Ad(R) o dm for a permutation R of the target indices."""
    return DiagonalMorphism(dm.source, dm.target, dm.maps, tuple(dm.perm[i] for i in R))


def compose_diagonal(outer: DiagonalMorphism, inner: DiagonalMorphism) -> DiagonalMorphism:
    """outer o inner. Blocks are ordered b-major: block (b, a) is t_a o s_b."""
    if inner.target != outer.source:
        raise StructuralError("inner target and outer source differ")
    nB = inner.target.n
    maps = tuple(t.after(s) for s in outer.maps for t in inner.maps)
    pin = [b * nB + inner.perm[r] for b in range(outer.k) for r in range(nB)]
    perm = tuple(pin[outer.perm[i]] for i in range(outer.target.n))
    return DiagonalMorphism(inner.source, outer.target, maps, perm)


def compose_chain(ms: Sequence[DiagonalMorphism]) -> DiagonalMorphism:
    """ms[-1] o ... o ms[0]."""
    out = ms[0]
    for m in ms[1:]:
        out = compose_diagonal(m, out)
    return out


# --- traces ------------------------------------------------------------------


def pushforward_density(dm: DiagonalMorphism):
    """(1/k) sum_l (t_l o alpha_target)_* Lebesgue as (lo, hi, value) pieces."""
    if dm.source.p != 1 or dm.target.p != 1:
        raise StructuralError("densities are computed for interval algebras only")
    parts = []
    for t in dm.maps:
        u = t if dm.target.alpha is None else t.after(dm.target.alpha)
        parts.extend(u.density_pieces())
    return merge_density(parts, Fraction(1, dm.k))


def is_trace_preserving(dm: DiagonalMorphism) -> bool:
    return pushforward_density(dm) == dm.source.trace_density()


def normalize_to_lebesgue(dm: DiagonalMorphism) -> DiagonalMorphism:
    """Conjugate by the trace homeomorphisms so both ends carry Lebesgue traces.

    With tau = alpha_* Lebesgue, f -> f o alpha is an isomorphism onto the
    Lebesgue object; the maps become alpha_src^-1 o t_l o alpha_tgt.
    """
    a_s, a_t = dm.source.alpha, dm.target.alpha
    maps = []
    for t in dm.maps:
        u = t if a_t is None else t.after(a_t)
        if a_s is not None:
            u = a_s.inverse().after(u)
        maps.append(u)
    return DiagonalMorphism(
        CubeAlgebra(dm.source.p, dm.source.n), CubeAlgebra(dm.target.p, dm.target.n), tuple(maps), dm.perm)


# --- distances -----------------------------------------------------------------


def aligned_distance(a: DiagonalMorphism, b: DiagonalMorphism):
    """max_l ||t_{l,a} - t_{sigma(l),b}|| when b's blocks are a's blocks permuted by sigma.

    Returns (distance, sigma); the distance is INF if the relative
    permutation is not a permutation of whole source-sized blocks.
    """
    if a.source != b.source or a.target != b.target:
        raise StructuralError("morphisms have different ends")
    inv_a = {v: i for i, v in enumerate(a.perm)}
    q = [b.perm[inv_a[j]] for j in range(a.target.n)]
    sigma = collapse_block_perm(q, a.source.n)
    if sigma is None:
        return INF, None
    return max(a.maps[l].sup_distance(b.maps[sigma[l]]) for l in range(a.k)), sigma


def max_image_diameter(dm: DiagonalMorphism) -> Fraction:
    return max(t.image_diameter() for t in dm.maps)
