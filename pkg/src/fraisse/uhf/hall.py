"""Matching two trace-preserving tuples of small maps block by block."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from fractions import Fraction
from itertools import combinations, permutations
from typing import Sequence

import sys
import threading
from math import lcm

import networkx as nx

from ..extq import StructuralError
from .pwa import PiecewiseAffineMap, merge_density


class NoPerfectMatching(ValueError):
    """The image-intersection graph has no perfect matching."""


def _boxes(ts: Sequence[PiecewiseAffineMap]):
    return [t.image_box() for t in ts]


def _meets(a, b) -> bool:
    return all(lo1 <= hi2 and lo2 <= hi1 for lo1, hi1, lo2, hi2 in zip(a[0], a[1], b[0], b[1]))


def tuple_density(ts: Sequence[PiecewiseAffineMap]):
    parts = [piece for t in ts for piece in t.density_pieces()]
    return merge_density(parts, Fraction(1, len(ts)))


def is_trace_preserving_tuple(ts: Sequence[PiecewiseAffineMap]) -> bool:
    return tuple_density(ts) == [(Fraction(0), Fraction(1), Fraction(1))]


def intersection_graph(t1: Sequence[PiecewiseAffineMap], t2: Sequence[PiecewiseAffineMap],
                       width: Fraction) -> list[list[int]]:
    """adj[l] = sorted l' whose image meets the image of t1[l].

    ``width`` bounds every image diameter; it lets us window the scan on
    the first coordinate instead of testing all k^2 pairs. Endpoints are
    scaled to integers over a common denominator to keep the scan cheap.
    """
    b1, b2 = _boxes(t1), _boxes(t2)
    D = lcm(*(v.denominator for b in (*b1, *b2) for side in b for v in side), Fraction(width).denominator)
    i1 = [tuple(tuple(v.numerator * (D // v.denominator) for v in side) for side in b) for b in b1]
    i2 = [tuple(tuple(v.numerator * (D // v.denominator) for v in side) for side in b) for b in b2]
    w = int(width * D)
    order = sorted(range(len(i2)), key=lambda j: i2[j][0][0])
    los = [i2[j][0][0] for j in order]
    adj = []
    for (blo, bhi) in i1:
        cand = order[bisect_left(los, blo[0] - w):bisect_right(los, bhi[0])]
        adj.append(sorted(j for j in cand
                          if all(a <= d and c <= b for a, b, c, d in zip(blo, bhi, i2[j][0], i2[j][1]))))
    return adj


def hall_match(t1: Sequence[PiecewiseAffineMap], t2: Sequence[PiecewiseAffineMap], delta,
               check_trace: bool = True, verify: bool = True) -> tuple[int, ...]:
    """sigma with ||t1[l] - t2[sigma[l]]|| < 2 delta for every l.

    Every image must have diameter < delta. Two maps with intersecting
    images then differ by less than 2 delta everywhere, and trace
    preservation makes the marriage condition hold on the intersection
    graph. ``verify=False`` skips the diameter precondition and the
    per-pair distance check, for callers that establish both themselves.
    """
    delta = Fraction(delta)
    k = len(t1)
    if len(t2) != k:
        raise StructuralError("tuples have different lengths")
    for t in (*t1, *t2) if verify else ():
        if t.image_diameter() >= delta:
            raise StructuralError(f"image diameter {t.image_diameter()} is not below delta={delta}")
    if check_trace and t1[0].dim == 1:
        for ts in (t1, t2):
            if not is_trace_preserving_tuple(ts):
                raise StructuralError("tuple is not trace-preserving")
    sigma = _equal_pairing(t1, t2)
    if sigma is None:
        sigma = _perfect_matching(intersection_graph(t1, t2, delta))
    for l in range(k if verify else 0):
        d = t1[l].sup_distance(t2[sigma[l]])
        if d >= 2 * delta:
            raise AssertionError(f"matched pair {l}->{sigma[l]} at distance {d} >= 2*delta")
    return sigma


def _equal_pairing(t1, t2):
    """Pair identical maps when the tuples are rearrangements of each other."""
    pool: dict = {}
    for j, t in enumerate(t2):
        pool.setdefault(t, []).append(j)
    sigma = []
    for t in t1:
        bucket = pool.get(t)
        if not bucket:
            return None
        sigma.append(bucket.pop(0))
    return tuple(sigma)


def _deep_call(fn, depth: int):
    """Run fn in a worker thread whose stack and recursion limit allow ``depth`` frames.

    networkx's Hopcroft-Karp recurses along augmenting paths, which get
    long on the interval graphs built here.
    """
    out: dict = {}

    def work():
        try:
            out["value"] = fn()
        except BaseException as e:  # re-raised in the caller
            out["error"] = e

    old_limit, old_stack = sys.getrecursionlimit(), threading.stack_size()
    sys.setrecursionlimit(max(old_limit, depth))
    threading.stack_size(min(max(depth * 2048, 1 << 24), 1 << 30))
    try:
        th = threading.Thread(target=work)
        th.start()
        th.join()
    finally:
        threading.stack_size(old_stack)
        sys.setrecursionlimit(old_limit)
    if "error" in out:
        raise out["error"]
    return out["value"]


def _perfect_matching(adj: list[list[int]]) -> tuple[int, ...]:
    # integer nodes (left l, right k + j): networkx iterates over node sets,
    # and ints hash the same in every process, so the matching is reproducible
    k = len(adj)
    G = nx.Graph()
    G.add_nodes_from(range(2 * k))
    G.add_edges_from((l, k + j) for l in range(k) for j in adj[l])
    match = _deep_call(lambda: nx.bipartite.hopcroft_karp_matching(G, top_nodes=range(k)), 4 * k + 1000)
    if any(l not in match for l in range(k)):
        raise NoPerfectMatching("image-intersection graph has no perfect matching")
    return tuple(match[l] - k for l in range(k))


def _union_length(intervals) -> Fraction:
    total, cur_lo, cur_hi = Fraction(0), None, None
    for lo, hi in sorted(intervals):
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def marriage_violations(t1: Sequence[PiecewiseAffineMap], t2: Sequence[PiecewiseAffineMap],
                        delta, max_k: int = 12) -> list[tuple[int, ...]]:
    """Subsets F of t1-indices breaking k*|union of images| >= |F| or |N(F)| >= |F|.

    The measure form is the one the matching argument actually needs;
    the neighbourhood form is Hall's condition on the built graph.
    Exhaustive over subsets, so only for small k.
    """
    k = len(t1)
    if k > max_k:
        raise ValueError("subset enumeration is limited to small k")
    adj = intersection_graph(t1, t2, Fraction(delta))
    imgs = [(b[0][0], b[1][0]) for b in _boxes(t1)]
    bad = []
    for r in range(1, k + 1):
        for F in combinations(range(k), r):
            nbrs = set().union(*(adj[l] for l in F))
            if k * _union_length([imgs[l] for l in F]) < r or len(nbrs) < r:
                bad.append(F)
    return bad


def brute_force_match(t1: Sequence[PiecewiseAffineMap], t2: Sequence[PiecewiseAffineMap]):
    """Exhaustive search for a permutation pairing intersecting images."""
    b1, b2 = _boxes(t1), _boxes(t2)
    ok = [[_meets(a, b) for b in b2] for a in b1]
    for sigma in permutations(range(len(t1))):
        if all(ok[l][s] for l, s in enumerate(sigma)):
            return sigma
    return None
