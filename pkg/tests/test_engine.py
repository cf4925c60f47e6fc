import json
from fractions import Fraction as F
from itertools import combinations, permutations, product

import pytest
from hypothesis import given, settings, strategies as st

from fraisse import apx
from fraisse.engine import (
    Chain,
    back_and_forth,
    build_generic_chain,
    check_limit_criteria,
    dK_upper,
    dovetail_schedule,
    partial_iso_defect,
    satisfying_embedding,
)
from fraisse.extq import INF
from fraisse.sampling import rng_for
from fraisse.structures import FinGraphCat, FinStructure, PointedObject, RatMetricCat

G = FinGraphCat()
M = RatMetricCat()


def pointed(vs, es):
    return PointedObject(G.from_edges(vs, es), tuple(vs))


def dk_graph_oracle(a, b):
    """Exact d^K between pointed graphs by enumerating all joint graphs."""
    A, B = a.obj.domain, b.obj.domain
    best = INF
    for k in range(min(len(A), len(B)) + 1):
        for dom in combinations(A.points, k):
            for img in permutations(B.points, k):
                h = dict(zip(dom, img))
                if any(A.d(x, y) != B.d(h[x], h[y]) for x in dom for y in dom):
                    continue
                free = [(x, y) for x in A.points if x not in h for y in B.points if y not in h.values()]
                for bits in product((1, 2), repeat=len(free)):
                    cross = dict(zip(free, bits))

                    def d(x, y):
                        if x in h:
                            return B.d(h[x], y)
                        inv = {v: u for u, v in h.items()}
                        if y in inv:
                            return A.d(x, inv[y])
                        return cross[x, y]

                    best = min(best, max(F(d(x, y)) for x, y in zip(a.tuple, b.tuple)))
    return best


# --- d^K ---------------------------------------------------------------------

def test_dk_same_object_is_zero():
    a = pointed(["u", "v"], [("u", "v")])
    assert dK_upper(a, a, G).bound == 0


def test_dk_edge_vs_non_edge():
    a = pointed(["u", "v"], [("u", "v")])
    b = pointed(["u", "v"], [])
    r = dK_upper(a, b, G)
    assert r.exhaustive and r.bound == 1 == dk_graph_oracle(a, b)


def _random_pointed(rng, n):
    vs = [f"a{i}" for i in range(n)]
    return pointed(vs, [e for e in combinations(vs, 2) if rng.random() < 0.5])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**40), st.integers(1, 2))
def test_dk_graphs_match_oracle_and_triangle(seed, n):
    rng = rng_for(seed)
    a, b, c = (_random_pointed(rng, n) for _ in range(3))
    rab, rbc, rac = dK_upper(a, b, G), dK_upper(b, c, G), dK_upper(a, c, G)
    assert rab.exhaustive and rab.bound == dk_graph_oracle(a, b)
    assert rac.bound <= rab.bound + rbc.bound


def test_dk_metric_upper_bound():
    from fraisse.extq import FiniteMetricSpace
    sa = FiniteMetricSpace(("a0", "a1"), ((0, F(1, 2)), (F(1, 2), 0)))
    sb = FiniteMetricSpace(("b0", "b1"), ((0, F(3, 4)), (F(3, 4), 0)))
    a = PointedObject(FinStructure.metric(sa), ("a0", "a1"))
    b = PointedObject(FinStructure.metric(sb), ("b0", "b1"))
    r = dK_upper(a, b, M)
    # identify a0 = b0; then d(a1, b1) >= 1/4 by the triangle inequality
    assert r.bound == F(1, 4) and not r.exhaustive
    assert apx.validate_apx(r.witness)


# --- chains ----------------------------------------------------------------

def test_single_step_chain():
    c = build_generic_chain(G, 5, 1)
    assert len(c) == 1 and c.log == []


def test_chain_replay_is_deterministic():
    a = build_generic_chain(M, 11, 25)
    b = build_generic_chain(M, 11, 25)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())


def test_chain_morphisms_are_inclusions():
    c = build_generic_chain(G, 3, 12)
    for k in range(len(c) - 1):
        S, T = c.stages[k].domain, c.stages[k + 1].domain
        assert apx.is_isometric(S, T, c.maps[k])
        assert G.is_object(c.stages[k + 1])
    assert c.composite(len(c) - 1, 0) == {p: p for p in c.stages[0].points}
    for entry in c.log:
        assert F(entry["gap"]) > 0


def test_graph_chain_satisfies_small_requests_exactly():
    c = build_generic_chain(G, 4, 80)
    S = c.last
    # every request over one- and two-vertex objects and F among the first
    # four vertices, the levels reached by this chain
    sched = dovetail_schedule(G, lambda: S.points, lambda: S)
    checked = 0
    for req in sched:
        if req.level > 2:
            break
        assert satisfying_embedding(req, S) is not None
        checked += 1
    assert checked > 50


def test_metric_chain_realizes_point_extensions():
    c = build_generic_chain(M, 2, 120)
    N, A1 = c.last.domain, c.stages[0].domain
    grid = [F(k, 4) for k in range(9)]
    for k in (1, 2, 3):
        for T in combinations(A1.points, k):
            for f in product(grid, repeat=k):
                if not apx.is_katetov(A1.subspace(T), list(f)):
                    continue
                assert any(all(abs(N.d(z, t) - v) <= F(1, 4) for t, v in zip(T, f)) for z in N.points)


# --- back and forth ----------------------------------------------------------

def test_back_and_forth_self_identification():
    c = build_generic_chain(G, 8, 8)
    S0 = c.stages[0].domain
    phi0 = apx.relax(apx.identity(S0), 1)
    r = back_and_forth(c, c, phi0)
    assert r.complete
    assert r.alpha == {p: p for p in c.last.points}
    assert apx.totality_defect(apx.restrict(r.psi, c.last.points, c.last.points)) <= F(1, 2 ** len(r.transcript))


def _is_partial_iso_brute(alpha, M_, N_):
    return all(M_.d(a, b) == N_.d(alpha[a], alpha[b]) for a in alpha for b in alpha) and \
        len(set(alpha.values())) == len(alpha)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**40))
def test_back_and_forth_between_generic_chains(seed):
    c1 = build_generic_chain(G, seed, 6, budget=12)
    c2 = build_generic_chain(G, seed + 1, 6, budget=12)
    phi0 = apx.all_inf(c1.stages[0].domain, c2.stages[0].domain)
    r = back_and_forth(c1, c2, phi0)
    Md, Nd = c1.last.domain, c2.last.domain
    assert _is_partial_iso_brute(r.alpha, Md, Nd)
    assert partial_iso_defect(r.alpha, Md, Nd) == 0
    for s in range(r.stages_m):
        assert set(c1.stages[s].points) <= set(r.alpha)
    for s in range(r.stages_n):
        assert set(c2.stages[s].points) <= set(r.alpha.values())
    # transcript tolerances follow the 2^-l schedule
    for t in r.transcript:
        if "defects" in t:
            bound = F(1, 2 ** (t["l"] + 1))
            assert F(t["defects"]["total"]) <= bound and F(t["defects"]["surj"]) <= bound


# --- limit criteria ----------------------------------------------------------

def complete_chain(n):
    stages = [G.from_edges([f"k{i}" for i in range(m)], list(combinations([f"k{i}" for i in range(m)], 2)))
              for m in range(1, n + 1)]
    return Chain(G, stages, [{p: p for p in s.points} for s in stages[:-1]])


def test_limit_single_object_chain_fails_a():
    c = build_generic_chain(G, 1, 1)
    big = G.from_edges([f"v{i}" for i in range(5)], [])
    rep = check_limit_criteria(c, G, sample_budget=5, objects=[c.stages[0], big])
    assert rep.embeds[0]["ok"] and not rep.embeds[1]["ok"]
    assert not rep.ok_a


def test_limit_complete_graph_chain():
    c = complete_chain(6)
    rep = check_limit_criteria(c, G, sample_budget=15, seed=2)
    assert rep.ok_b
    # only complete graphs embed
    assert all(r["ok"] == all(v in ("0", "1") for row in r["object"]["dist"] for v in row) for r in rep.embeds)


def test_limit_generic_chain_embeds_small_graphs():
    c = build_generic_chain(G, 0, 40)
    objs = [G.from_edges([f"a{i}" for i in range(n)], es)
            for n in (1, 2, 3)
            for es in [list(e) for k in range(4) for e in combinations(combinations([f"a{i}" for i in range(n)], 2), k)]]
    rep = check_limit_criteria(c, G, sample_budget=5, objects=objs)
    assert rep.ok_a
