"""Seeded random instances of finite metric spaces and approximate isometries.

All randomness flows through :class:`random.Random` (Mersenne Twister)
seeded with a single integer, so every instance is reproducible.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from typing import Sequence

from . import apx
from .apx import ApproximateIsometry
from .extq import FiniteMetricSpace


def rng_for(seed: int) -> random.Random:
    return random.Random(seed & (2**64 - 1))


def random_katetov(rng: random.Random, space: FiniteMetricSpace, denom: int = 16, max_num: int = 32) -> list[Fraction]:
    """A positive Katetov function: min over a few anchors of offset + distance."""
    n = len(space)
    if n == 0:
        return []
    anchors = rng.sample(range(n), rng.randint(1, min(3, n)))
    w = {a: Fraction(rng.randint(1, max_num), denom) for a in anchors}
    D = space.dist
    if any(w[a] + w[b] < D[a][b] for a in anchors for b in anchors):
        # half the diameter, rounded up to the 1/denom grid
        bump = Fraction(math.ceil(space.diameter() * denom / 2), denom)
        w = {a: v + bump for a, v in w.items()}
    return [min(w[a] + D[a][i] for a in anchors) for i in range(n)]


def extend_by_point(space: FiniteMetricSpace, name: str, f: Sequence[Fraction]) -> FiniteMetricSpace:
    pts = space.points + (name,)
    rows = [tuple(r) + (f[i],) for i, r in enumerate(space.dist)]
    rows.append(tuple(f) + (Fraction(0),))
    return FiniteMetricSpace(pts, tuple(rows))


def random_metric(
    rng: random.Random, n: int, prefix: str = "p", denom: int = 16, max_num: int = 32
) -> FiniteMetricSpace:
    """Random rational metric space built by iterated one-point extensions."""
    space = FiniteMetricSpace((), ())
    for i in range(n):
        space = extend_by_point(space, f"{prefix}{i}", random_katetov(rng, space, denom, max_num))
    return space


def random_extension(
    rng: random.Random, base: FiniteMetricSpace, k: int, prefix: str, denom: int = 16, max_num: int = 32
) -> FiniteMetricSpace:
    space = base
    for i in range(k):
        space = extend_by_point(space, f"{prefix}{i}", random_katetov(rng, space, denom, max_num))
    return space


def random_apx_into(
    rng: random.Random, target: FiniteMetricSpace, nx: int, prefix: str = "x", denom: int = 16,
    relax_prob: float = 0.3,
) -> ApproximateIsometry:
    """Random finite approximate isometry into ``target`` from a fresh space.

    The source is made of new points added to ``target``; the table is read
    off the ambient space and sometimes relaxed by a random amount.
    """
    ambient = random_extension(rng, target, nx, prefix, denom)
    X = ambient.subspace([f"{prefix}{i}" for i in range(nx)])
    phi = apx.ApproximateIsometry(
        X, target, tuple(tuple(ambient.d(x, y) for y in target.points) for x in X.points)
    )
    if rng.random() < relax_prob:
        phi = apx.relax(phi, Fraction(rng.randint(0, denom), denom))
    return phi


def random_apx(
    rng: random.Random, source: FiniteMetricSpace, target: FiniteMetricSpace, denom: int = 16,
    inf_prob: float = 0.0,
) -> ApproximateIsometry:
    """Random approximate isometry between two given spaces.

    Built as the trivial extension of a random small realizable table on
    subsets, then relaxed; both steps keep the table separately Katetov.
    """
    if rng.random() < inf_prob or not len(source) or not len(target):
        return apx.all_inf(source, target)
    x0 = rng.choice(source.points)
    y0 = rng.choice(target.points)
    core = apx.ApproximateIsometry(
        source.subspace([x0]), target.subspace([y0]), ((Fraction(rng.randint(0, 2 * denom), denom),),)
    )
    phi = apx.trivial_extension(core, source, target)
    # tighten with a second realizable constraint when possible
    if len(target) > 1 and rng.random() < 0.7:
        other = random_apx_into(rng, target, len(source), prefix="_s", denom=denom, relax_prob=0)
        renamed = apx.ApproximateIsometry(source, target, other.values)
        if apx.validate_apx(renamed):
            phi = apx.ApproximateIsometry(
                source, target,
                tuple(tuple(min(a, b) for a, b in zip(r1, r2)) for r1, r2 in zip(phi.values, renamed.values)),
            )
            if not apx.validate_apx(phi):
                phi = renamed
    return apx.relax(phi, Fraction(rng.randint(0, denom), denom)) if rng.random() < 0.3 else phi
