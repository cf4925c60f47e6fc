"""Generic chains, the d^K upper bound, back-and-forth and limit criteria.

Stage objects keep the names of earlier points, so every connecting
morphism is an inclusion and the image of stage k inside any later stage
is just the set of stage-k point names.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, count, islice
from typing import Callable, Iterator, Optional, Sequence

from . import apx
from .apx import ApproximateIsometry
from .extq import INF, ExtQ, FiniteMetricSpace, StructuralError
from .sampling import rng_for
from .serialize import apx_to_json, q, structure_to_json
from .structures import (
    Category,
    FinStructure,
    PointedObject,
    SearchBudgetExceeded,
    all_partial_isometries,
    find_embedding,
    isometric_embeddings,
)


class BudgetExhausted(RuntimeError):
    pass


# --- requests ------------------------------------------------------------------


@dataclass(frozen=True)
class Request:
    """Realize a copy of ``obj`` whose cross distances to F match ``theta`` within eps.

    The requested approximate isometry into a stage S is ext(theta) + eps on
    obj x S; any embedding within eps of theta on F is strictly below it.
    """

    level: int
    obj_index: int
    obj: PointedObject
    theta: ApproximateIsometry
    eps: Fraction

    @property
    def F(self) -> tuple[str, ...]:
        return self.theta.target.points

    def requested(self, S: FinStructure) -> ApproximateIsometry:
        return apx.relax(apx.trivial_extension(self.theta, self.theta.source, S.domain), self.eps)


def satisfying_embedding(req: Request, S: FinStructure) -> Optional[dict[str, str]]:
    """An embedding of the requested object into S within eps of theta on F."""
    th, eps = req.theta, req.eps
    Fpts = th.target.points

    def ok(a, b):
        return all(abs(S.domain.d(b, f) - th(a, f)) < eps for f in Fpts)

    return find_embedding(req.obj.obj.domain, S.domain, allowed=ok)


def dovetail_schedule(cat: Category, points: Callable[[], Sequence[str]],
                      stage: Callable[[], FinStructure], max_f: int = 3) -> Iterator[Request]:
    """Deterministic enumeration of a dense family of requests.

    Level L pairs the first L pointed objects with target sets F among the
    first L + 2 chain points (|F| <= max_f, |A| * |F| <= L + 2), cross tables
    on the category's level-L grid, and tolerance 2^-L. ``points`` and
    ``stage`` are read lazily because the chain grows while the schedule runs.
    """
    objs: list[PointedObject] = []
    source = cat.pointed_objects()
    for level in count(1):
        while len(objs) < level:
            nxt = next(source, None)
            if nxt is None:
                break
            objs.append(nxt)
        eps = Fraction(1, 2 ** level)
        for k, po in enumerate(objs[:level]):
            A = po.obj.domain
            pool = list(points())[: level + 2]
            for size in range(1, max_f + 1):
                if size * len(A) > level + 2:
                    break
                for Fpts in combinations(pool, size):
                    Fsp = stage().domain.subspace(Fpts)
                    for theta in cat.cross_tables(A, Fsp, level):
                        yield Request(level, k, po, theta, eps)


# --- chains ------------------------------------------------------------------


@dataclass
class Chain:
    category: Category
    stages: list[FinStructure]
    maps: list[dict[str, str]] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)
    seed: int = 0
    complete: bool = True

    def __len__(self):
        return len(self.stages)

    def composite(self, l: int, k: int) -> dict[str, str]:
        """iota_{l,k}: stage k -> stage l (0-based, l >= k)."""
        m = {p: p for p in self.stages[k].points}
        for t in range(k, l):
            m = {p: self.maps[t][v] for p, v in m.items()}
        return m

    @property
    def last(self) -> FinStructure:
        return self.stages[-1]

    def to_json(self) -> dict:
        return {
            "category": self.category.name,
            "seed": self.seed,
            "complete": self.complete,
            "stages": [structure_to_json(s) for s in self.stages],
            "transcript": self.log,
        }


def build_generic_chain(cat: Category, seed: int, steps: int, seed_size: int = 3,
                        budget: Optional[int] = None, schedule=None,
                        max_requests: int = 2_000_000, max_blocked: int = 10_000) -> Chain:
    """Grow a chain by realizing the first unsatisfied request at each step.

    ``budget`` caps the number of points of a stage; requests that would
    exceed it are skipped. ``max_requests`` bounds the total schedule work
    and ``max_blocked`` the run of consecutive budget-skipped requests;
    running out of either raises :class:`BudgetExhausted`.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    rng = rng_for(seed)
    first = cat.sample_object(rng, seed_size)
    chain = Chain(cat, [first], seed=seed)
    if steps == 1:
        return chain
    sched = schedule or dovetail_schedule(cat, lambda: chain.last.points, lambda: chain.last)
    seen = blocked = 0
    for req in sched:
        seen += 1
        if seen > max_requests:
            chain.complete = False
            raise BudgetExhausted(f"request budget {max_requests} exhausted after {len(chain)} stages")
        S = chain.last
        if budget is not None and len(S) + len(req.obj.obj) > budget:
            blocked += 1
            if blocked > max_blocked:
                chain.complete = False
                raise BudgetExhausted(f"vertex budget {budget} blocked {blocked} requests in a row "
                                      f"after {len(chain)} stages")
            continue
        blocked = 0
        if satisfying_embedding(req, S) is not None:
            continue
        k = len(chain.stages)
        new, emb = cat.realize(S, req.theta, fresh=f"s{k}:")
        phi_iota = apx.from_isometry(req.obj.obj.domain, new.domain, emb)
        requested = req.requested(new)
        gap = apx.domination_gap(requested, phi_iota)
        if gap is None:
            raise AssertionError("realized embedding is not strictly below the request")
        chain.stages.append(new)
        chain.maps.append({p: p for p in S.points})
        chain.log.append({
            "step": k,
            "level": req.level,
            "object": req.obj_index,
            "request": apx_to_json(req.theta),
            "eps": q(req.eps),
            "witness": dict(emb),
            "gap": q(gap),
            "defects": {
                "total": q(apx.totality_defect(apx.restrict(phi_iota, phi_iota.source.points, req.F))),
                "surj": q(apx.surjectivity_defect(apx.restrict(phi_iota, phi_iota.source.points, req.F))),
            },
        })
        if len(chain.stages) >= steps:
            break
    return chain


# --- d^K -----------------------------------------------------------------------


@dataclass
class DKResult:
    bound: ExtQ
    witness: Optional[ApproximateIsometry]
    tried: int
    exhaustive: bool
    diagnostic: str = ""


def _tuple_cost(theta: ApproximateIsometry, a: Sequence[str], b: Sequence[str]) -> ExtQ:
    return max((theta(x, y) for x, y in zip(a, b)), default=Fraction(0))


def dK_upper(a: PointedObject, b: PointedObject, cat: Category, budget: int = 10_000) -> DKResult:
    """Least max_i d(iota a_i, eta b_i) over up to ``budget`` joint embeddings.

    Candidates: the category's JEP witness, the exact amalgams over every
    common partial isometry, then every realizable cross table on the
    level-1 grid. The result is flagged exhaustive when the category is
    discrete (all cross tables are on the grid) and the budget sufficed.
    """
    if len(a.tuple) != len(b.tuple):
        raise StructuralError("tuples must have the same length")
    A, B = a.obj.domain, b.obj.domain
    best: ExtQ = INF
    best_w = None
    tried = 0

    def consider(theta):
        nonlocal best, best_w
        c = _tuple_cost(theta, a.tuple, b.tuple)
        if c < best:
            best, best_w = c, theta

    j = cat.jep(a.obj, b.obj)
    amb = j.ambient.domain
    consider(ApproximateIsometry(A, B, tuple(tuple(amb.d(j.left[x], j.right[y]) for y in B.points) for x in A.points)))
    tried += 1
    for h in all_partial_isometries(A, B):
        if tried >= budget:
            break
        if not h:
            continue
        dom = list(h)
        core = ApproximateIsometry(
            A.subspace(dom), B.subspace([h[x] for x in dom]),
            tuple(tuple(A.d(x, y) for y in dom) for x in dom),
        )
        theta = apx.trivial_extension(core, A, B)
        if cat.is_realizable(theta):
            consider(theta)
            tried += 1
    exhausted = True
    for theta in cat.cross_tables(A, B, 1):
        if tried >= budget:
            exhausted = False
            break
        consider(theta)
        tried += 1
    exhaustive = cat.exact and exhausted
    diag = "" if best is not INF else "no witness found within budget"
    return DKResult(best, best_w, tried, exhaustive, diag)


# --- back and forth ------------------------------------------------------------


@dataclass
class BackAndForthResult:
    psi: ApproximateIsometry
    alpha: dict[str, str]
    transcript: list[dict]
    complete: bool
    stages_m: int
    stages_n: int

    def to_json(self) -> dict:
        return {
            "complete": self.complete,
            "compared_stages": {"M": self.stages_m, "N": self.stages_n},
            "alpha": self.alpha,
            "transcript": self.transcript,
        }


def _extend(alpha: dict[str, str], new: Sequence[str], M: FiniteMetricSpace, N: FiniteMetricSpace,
            ok: Callable[[str, str], bool]) -> Optional[dict[str, str]]:
    """Extend a partial isometry over ``new`` points with pointwise constraints."""
    todo = [x for x in new if x not in alpha]
    used = set(alpha.values())

    def rec(k, cur):
        if k == len(todo):
            return dict(cur)
        x = todo[k]
        for y in N.points:
            if y in used or not ok(x, y):
                continue
            if all(M.d(x, x2) == N.d(y, y2) for x2, y2 in cur.items()):
                cur[x] = y
                used.add(y)
                r = rec(k + 1, cur)
                if r is not None:
                    return r
                del cur[x]
                used.discard(y)
        return None

    return rec(0, dict(alpha))


def _psi_of(alpha: dict[str, str], M: FiniteMetricSpace, N: FiniteMetricSpace, delta: Fraction) -> ApproximateIsometry:
    dom = list(alpha)
    core = apx.from_isometry(M.subspace(dom), N, alpha)
    return apx.relax(apx.trivial_extension(core, M, N), delta)


def back_and_forth(chainM: Chain, chainN: Chain, phi0: ApproximateIsometry,
                   l_max: Optional[int] = None) -> BackAndForthResult:
    """Alternately extend a partial isometry forward over M's stages and
    backward over N's stages, keeping each new approximate isometry
    strictly below the previous one.

    ``phi0`` lives on the first stages. Step l uses delta_{l+1} = 2^-(l+2).
    Even steps make psi delta-total on the next stage of M, odd steps
    delta-surjective on the next stage of N. If no extension exists inside
    the final stages, the result is returned with ``complete=False``.
    """
    M, N = chainM.last.domain, chainN.last.domain
    if l_max is None:
        l_max = 2 * max(len(chainM), len(chainN))
    psi = apx.trivial_extension(phi0, M, N)
    alpha: dict[str, str] = {}
    transcript = []
    done_m = done_n = 0
    complete = True
    for l in range(l_max):
        delta = Fraction(1, 2 ** (l + 2))
        forward = l % 2 == 0
        if forward:
            idx = min(l // 2, len(chainM) - 1)
            new = chainM.stages[idx].points

            def ok(x, y, psi=psi, delta=delta):
                return all(N.d(y, y2) + delta < psi(x, y2) for y2 in N.points)

            ext = _extend(alpha, new, M, N, ok)
        else:
            idx = min(l // 2, len(chainN) - 1)
            new = chainN.stages[idx].points
            inv = {v: k for k, v in alpha.items()}

            def ok(y, x, psi=psi, delta=delta):
                return all(M.d(x, x2) + delta < psi(x2, y) for x2 in M.points)

            back = _extend(inv, new, N, M, ok)
            ext = None if back is None else {v: k for k, v in back.items()}
        if ext is None:
            complete = False
            transcript.append({"l": l, "direction": "forth" if forward else "back",
                               "stage": idx + 1, "status": "no extension in final stage"})
            break
        new_psi = _psi_of(ext, M, N, delta)
        if not apx.strictly_dominates(psi, new_psi):
            raise AssertionError("back-and-forth lost strict domination")
        X = list(ext)
        Y = list(ext.values())
        tot = apx.totality_defect(apx.restrict(new_psi, X, N.points))
        surj = apx.surjectivity_defect(apx.restrict(new_psi, M.points, Y))
        transcript.append({
            "l": l,
            "direction": "forth" if forward else "back",
            "stage": idx + 1,
            "delta": q(delta),
            "added": {x: ext[x] for x in ext if x not in alpha},
            "gap": q(apx.domination_gap(psi, new_psi)),
            "defects": {"total": q(tot), "surj": q(surj)},
        })
        if forward:
            done_m = max(done_m, idx + 1)
        else:
            done_n = max(done_n, idx + 1)
        psi, alpha = new_psi, ext
    return BackAndForthResult(psi, alpha, transcript, complete, done_m, done_n)


def partial_iso_defect(alpha: dict[str, str], M: FiniteMetricSpace, N: FiniteMetricSpace) -> Fraction:
    """max |d(x, x') - d(alpha x, alpha x')| over the domain; 0 for a partial isometry."""
    xs = list(alpha)
    return max((abs(M.d(a, b) - N.d(alpha[a], alpha[b])) for a in xs for b in xs), default=Fraction(0))


# --- limit criteria ----------------------------------------------------------


@dataclass
class LimitReport:
    embeds: list[dict] = field(default_factory=list)
    homogeneity: list[dict] = field(default_factory=list)

    @property
    def ok_a(self) -> bool:
        return all(r["ok"] for r in self.embeds)

    @property
    def ok_b(self) -> bool:
        return all(r["ok"] for r in self.homogeneity)

    @property
    def ok(self) -> bool:
        return self.ok_a and self.ok_b

    def to_json(self) -> dict:
        return {"a": self.embeds, "b": self.homogeneity, "ok_a": self.ok_a, "ok_b": self.ok_b}


def check_limit_criteria(chain: Chain, cat: Category, sample_budget: int = 20, seed: int = 0,
                         max_size: int = 3, objects: Optional[Sequence[FinStructure]] = None,
                         search_budget: int = 20_000) -> LimitReport:
    """Sampled checks of the two sufficient conditions for a chain limit.

    (a) sampled objects embed into some stage; (b) for sampled
    F subset of stage i, eps and embeddings eta of stage i into stage j, some
    automorphism of a later stage k moves eta(F) back within eps of F.
    """
    rng = rng_for(seed)
    rep = LimitReport()
    objs = list(objects) if objects is not None else [
        cat.sample_object(rng, rng.randint(1, max_size)) for _ in range(sample_budget)]
    for C in objs:
        hit = None
        for n, S in enumerate(chain.stages):
            e = find_embedding(C.domain, S.domain)
            if e is not None:
                hit = (n, e)
                break
        rep.embeds.append({
            "object": structure_to_json(C), "ok": hit is not None,
            "stage": None if hit is None else hit[0] + 1, "embedding": None if hit is None else hit[1],
        })
    L = len(chain)
    for _ in range(sample_budget if L >= 3 else 0):
        i = rng.randrange(0, L - 2)
        j = rng.randrange(i + 1, L - 1)
        Si, Sj = chain.stages[i].domain, chain.stages[j].domain
        F = rng.sample(Si.points, rng.randint(1, len(Si)))
        eps = Fraction(1, 2 ** rng.randint(1, 4))
        etas = list(islice(isometric_embeddings(Si, Sj), 50))
        eta = etas[rng.randrange(len(etas))]
        found = None
        note = ""
        for k in range(j + 1, L):
            Sk = chain.stages[k].domain
            to_k = chain.composite(k, j)
            home = chain.composite(k, i)
            want = {to_k[eta[a]]: home[a] for a in F}

            def allowed(u, v, want=want, Sk=Sk):
                return u not in want or Sk.d(v, want[u]) < eps

            try:
                auto = find_embedding(Sk, Sk, allowed=allowed, bijective=True, node_budget=search_budget)
            except SearchBudgetExceeded:
                note = f"search budget exhausted at stage {k + 1}"
                continue
            if auto is not None:
                found = (k, auto)
                break
        rep.homogeneity.append({
            "i": i + 1, "j": j + 1, "F": F, "eps": q(eps), "eta": eta, "ok": found is not None,
            "k": None if found is None else found[0] + 1,
            "automorphism": None if found is None else found[1], "note": note,
        })
    return rep
