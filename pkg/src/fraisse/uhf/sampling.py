"""Seeded random trace-preserving map tuples and diagonal morphisms."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from .core import CubeAlgebra, DiagonalMorphism
from .pwa import PiecewiseAffineMap, zigzag


def random_partition(rng: random.Random, k: int, max_part: int) -> list[int]:
    parts = []
    while k:
        j = rng.randint(1, min(k, max_part))
        parts.append(j)
        k -= j
    rng.shuffle(parts)
    return parts


def random_doubly_stochastic(rng: random.Random, j: int, moves: int = 2) -> list[list[Fraction]]:
    """Positive rational j x j matrix with unit row and column sums."""
    W = [[Fraction(1, j)] * j for _ in range(j)]
    if j < 2:
        return W
    for _ in range(moves):
        a, b = rng.sample(range(j), 2)
        c, d = rng.sample(range(j), 2)
        up = min(W[a][d], W[b][c])
        down = min(W[a][c], W[b][d])
        t = rng.choice([up, -down]) * Fraction(rng.randint(1, 2), 4)
        W[a][c] += t
        W[b][d] += t
        W[a][d] -= t
        W[b][c] -= t
    return W


def _sweep(weights, lo: Fraction, cell: Fraction, descending: bool) -> PiecewiseAffineMap:
    """Monotone map spending weights[c] of the domain on the c-th cell of length ``cell``."""
    j = len(weights)
    xs, ys = [Fraction(0)], [lo + j * cell if descending else lo]
    x = Fraction(0)
    for c in range(j):
        x += weights[c]
        xs.append(x)
        ys.append(lo + (j - c - 1) * cell if descending else lo + (c + 1) * cell)
    xs[-1] = Fraction(1)
    return PiecewiseAffineMap.from_points(xs, ys)


def random_tp_tuple(rng: random.Random, k: int, max_group: Optional[int] = None,
                    zigzag_prob: float = 0.3) -> list[PiecewiseAffineMap]:
    """k maps whose averaged pushforward of Lebesgue measure is Lebesgue.

    The interval is cut into consecutive pieces of length j/k shared by a
    group of j maps. Each map sweeps its piece monotonically, spending
    W[l][c] of its domain on the c-th subcell of length 1/k; W doubly
    stochastic makes the group's total density exactly k there. Some maps
    are pre-composed with a Lebesgue-preserving zigzag.
    """
    groups = random_partition(rng, k, max_group or k)
    out = []
    lo = Fraction(0)
    cell = Fraction(1, k)
    for j in groups:
        W = random_doubly_stochastic(rng, j)
        for row in W:
            desc = rng.random() < 0.5
            t = _sweep(row[::-1] if desc else row, lo, cell, desc)
            if rng.random() < zigzag_prob:
                t = t.after(zigzag([Fraction(rng.randint(1, 3), 4)], start_low=rng.random() < 0.5))
            out.append(t)
        lo += j * cell
    rng.shuffle(out)
    return out


def random_tuple_pair(rng: random.Random, k: int, max_group: int = 3):
    """Two independent trace-preserving k-tuples and a delta above every image diameter."""
    t1 = random_tp_tuple(rng, k, max_group)
    t2 = random_tp_tuple(rng, k, max_group)
    diam = max(t.image_diameter() for t in (*t1, *t2))
    return t1, t2, diam + Fraction(1, 4 * k)


def random_morphism(rng: random.Random, source: CubeAlgebra, k: int, max_group: Optional[int] = None,
                    zigzag_prob: float = 0.3) -> DiagonalMorphism:
    maps = random_tp_tuple(rng, k, max_group, zigzag_prob)
    perm = list(range(source.n * k))
    rng.shuffle(perm)
    return DiagonalMorphism(source, CubeAlgebra(1, source.n * k), tuple(maps), tuple(perm))
