from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from fraisse import apx
from fraisse.apx import ApproximateIsometry, DominationError, NoFiniteAmalgam, Perturbation
from fraisse.extq import INF, FiniteMetricSpace, StructuralError, validate_metric
from fraisse.sampling import random_apx, random_apx_into, random_extension, random_metric, rng_for

from conftest import space

seeds = st.integers(0, 2**40)


def table(src, dst, rows):
    return ApproximateIsometry(src, dst, tuple(tuple(INF if v == "inf" else F(v) for v in r) for r in rows))


def oracle_compose(psi, phi):
    # dict-based min-plus, written without the package helpers
    out = {}
    for x in phi.source.points:
        for z in psi.target.points:
            best = None
            for y in phi.target.points:
                a, b = phi(x, y), psi(y, z)
                s = None if (a is INF or b is INF) else a + b
                if s is not None and (best is None or s < best):
                    best = s
            out[x, z] = INF if best is None else best
    return out


def oracle_katetov(space_, f):
    pts = space_.points
    for a, b in product(pts, pts):
        fa, fb, d = f[a], f[b], space_.d(a, b)
        if fa is INF or fb is INF:
            if (fa is INF) != (fb is INF):
                return False
            continue
        if fa > d + fb or d > fa + fb:
            return False
    return True


def triple(rng):
    Y = random_metric(rng, rng.randint(1, 6), "y")
    phi = random_apx_into(rng, Y, rng.randint(1, 6), "x")
    psi = apx.adjoint(random_apx_into(rng, Y, rng.randint(1, 6), "z"))
    theta = random_apx(rng, psi.target, random_metric(rng, rng.randint(1, 6), "w"))
    return phi, psi, theta


# --- Katetov ---------------------------------------------------------------

def test_katetov_examples():
    two = space("ab", [[0, 1], [1, 0]])
    assert apx.is_katetov(two, {"a": F(0), "b": F(2)}) is False
    assert apx.is_katetov(two, {"a": INF, "b": INF})
    s = random_metric(rng_for(3), 5)
    assert apx.is_katetov(s, {p: s.d(p, "p2") for p in s.points})


def test_constant_table_threshold():
    two = space("ab", [[0, 1], [1, 0]])
    assert not apx.validate_apx(apx.constant(two, two, F(1, 4)))
    assert apx.validate_apx(apx.constant(two, two, F(1, 2)))
    assert not apx.validate_apx(apx.constant(two, two, F(49, 100)))
    assert apx.validate_apx(apx.all_inf(two, two))


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(1, 5))
def test_is_katetov_matches_oracle(seed, n):
    rng = rng_for(seed)
    s = random_metric(rng, n)
    f = {p: F(rng.randint(0, 40), 8) for p in s.points}
    assert apx.is_katetov(s, f) == oracle_katetov(s, f)


# --- joint embeddings --------------------------------------------------------

def test_joint_embedding_examples():
    s = random_metric(rng_for(7), 4)
    ident = {p: p for p in s.points}
    w = apx.JointEmbeddingWitness(s, s, s, ident, ident)
    assert apx.from_joint_embedding(w) == apx.identity(s)
    one = s.subspace(["p1"])
    w1 = apx.JointEmbeddingWitness(one, s, s, {"p1": "p1"}, ident)
    assert apx.from_joint_embedding(w1).values == (s.dist[1],)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_joint_embedding_is_apx_and_factorizes(seed):
    rng = rng_for(seed)
    amb = random_metric(rng, rng.randint(2, 7), "a")
    xs = rng.sample(amb.points, rng.randint(1, len(amb)))
    ys = rng.sample(amb.points, rng.randint(1, len(amb)))
    X, Y = amb.subspace(xs), amb.subspace(ys)
    w = apx.JointEmbeddingWitness(X, Y, amb, {p: p for p in xs}, {p: p for p in ys})
    phi = apx.from_joint_embedding(w)
    assert apx.validate_apx(phi)
    phi_i = apx.from_joint_embedding(apx.JointEmbeddingWitness(X, amb, amb, {p: p for p in xs}, {p: p for p in amb.points}))
    phi_e = apx.from_joint_embedding(apx.JointEmbeddingWitness(Y, amb, amb, {p: p for p in ys}, {p: p for p in amb.points}))
    assert apx.compose(apx.adjoint(phi_e), phi_i) == phi


# --- adjoint / compose -------------------------------------------------------

def test_adjoint_transpose_and_involution():
    X = space("ab", [[0, 1], [1, 0]])
    Y = space("uvw", [[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    phi = apx.constant(X, Y, 1)
    assert apx.adjoint(phi).shape == (3, 2)
    assert apx.adjoint(apx.adjoint(phi)) == phi
    assert apx.adjoint(apx.identity(Y)) == apx.identity(Y)


def test_compose_worked_example():
    X = space("x", [[0]])
    Y = FiniteMetricSpace(("y1", "y2"), ((0, 2), (2, 0)))
    Z = space("z", [[0]])
    phi = table(X, Y, [[1, 3]])
    psi = table(Y, Z, [[4], [2]])
    assert apx.validate_apx(phi) and apx.validate_apx(psi)
    assert apx.compose(psi, phi).values == ((F(5),),)


def test_compose_mismatch_is_structural():
    X = space("x", [[0]])
    Y = space("y", [[0]])
    with pytest.raises(StructuralError):
        apx.compose(apx.identity(X), apx.identity(Y))


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_compose_matches_oracle_and_is_associative(seed):
    phi, psi, theta = triple(rng_for(seed))
    for t in (phi, psi, theta):
        assert apx.validate_apx(t)
    c = apx.compose(psi, phi)
    o = oracle_compose(psi, phi)
    assert all(c(x, z) == o[x, z] for x, z in o)
    assert apx.validate_apx(c)
    assert apx.compose(theta, c) == apx.compose(apx.compose(theta, psi), phi)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_identity_laws_and_adjoint_of_composite(seed):
    phi, psi, _ = triple(rng_for(seed))
    assert apx.compose(apx.identity(phi.target), phi) == phi
    assert apx.compose(phi, apx.identity(phi.source)) == phi
    assert apx.adjoint(apx.compose(psi, phi)) == apx.compose(apx.adjoint(phi), apx.adjoint(psi))
    assert apx.compose(apx.all_inf(psi.source, psi.target), phi).is_all_inf()


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(0, 16), st.integers(0, 16))
def test_relax_commutes_with_compose(seed, a, b):
    phi, psi, _ = triple(rng_for(seed))
    e, d = F(a, 8), F(b, 8)
    assert apx.compose(apx.relax(psi, e), apx.relax(phi, d)) == apx.relax(apx.compose(psi, phi), e + d)
    assert apx.relax(phi, 0) == phi
    assert apx.relax(apx.all_inf(phi.source, phi.target), e).is_all_inf()


# --- restriction / trivial extension -------------------------------------------

def test_restriction_examples():
    phi, _, _ = triple(rng_for(11))
    X, Y = phi.source, phi.target
    assert apx.restrict(phi, X.points, Y.points) == phi
    r = apx.restrict(phi, X.points[:1], Y.points[:1])
    assert r.values == ((phi(X.points[0], Y.points[0]),),)
    with pytest.raises(StructuralError):
        apx.restrict(phi, ["nope"], Y.points)


def test_trivial_extension_edge_cases():
    phi, _, _ = triple(rng_for(12))
    X, Y = phi.source, phi.target
    assert apx.trivial_extension(phi, X, Y) == phi
    empty = apx.restrict(phi, [], Y.points)
    assert apx.trivial_extension(empty, X, Y).is_all_inf()


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_restrict_equals_inclusion_sandwich(seed):
    rng = rng_for(seed)
    phi, _, _ = triple(rng)
    X, Y = phi.source, phi.target
    xs = rng.sample(X.points, rng.randint(1, len(X)))
    ys = rng.sample(Y.points, rng.randint(1, len(Y)))
    Xp, Yp = X.subspace(xs), Y.subspace(ys)
    iota = apx.from_isometry(Xp, X, {p: p for p in xs})
    eta = apx.from_isometry(Yp, Y, {p: p for p in ys})
    r = apx.restrict(phi, xs, ys)
    assert apx.compose(apx.adjoint(eta), apx.compose(phi, iota)) == r
    ext = apx.trivial_extension(r, X, Y)
    assert apx.validate_apx(ext)
    assert apx.restrict(ext, xs, ys) == r
    assert phi <= ext


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_trivial_extension_maximality(seed):
    rng = rng_for(seed)
    theta, _, _ = triple(rng)
    X, Y = theta.source, theta.target
    xs = rng.sample(X.points, rng.randint(1, len(X)))
    ys = rng.sample(Y.points, rng.randint(1, len(Y)))
    psi = apx.relax(apx.restrict(random_apx(rng, X, Y), xs, ys), F(rng.randint(0, 4), 4))
    ext = apx.trivial_extension(psi, X, Y)
    assert (theta <= ext) == (apx.restrict(theta, xs, ys) <= psi)


# --- amalgamation -----------------------------------------------------------

def test_amalgam_examples():
    X = space("x", [[0]])
    Y = space("y", [[0]])
    w = apx.amalgamate(table(X, Y, [[3]]))
    assert len(w.ambient) == 2 and w.ambient.d(w.iota["x"], w.eta["y"]) == 3
    s = random_metric(rng_for(5), 4)
    w = apx.amalgamate(apx.identity(s))
    assert len(w.ambient) == 4 and w.iota == w.eta
    with pytest.raises(NoFiniteAmalgam):
        apx.amalgamate(apx.all_inf(X, Y))


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_amalgam_realizes_table(seed):
    phi, _, _ = triple(rng_for(seed))
    if phi.is_all_inf():
        return
    w = apx.amalgamate(phi)
    assert validate_metric(w.ambient) == []
    assert apx.check_realization(w, phi)


# --- defects ------------------------------------------------------------------

def test_defect_examples():
    X = space("x", [[0]])
    Y = FiniteMetricSpace(("y1", "y2"), ((0, 3), (3, 0)))
    phi = table(X, Y, [[2, 5]])
    assert apx.validate_apx(phi)
    assert apx.totality_defect_star(phi) == apx.totality_defect_maxmin(phi) == 2
    assert apx.is_epsilon_total(phi, 2) and not apx.is_epsilon_total(phi, F(19, 10))
    assert apx.totality_defect(apx.all_inf(X, Y)) is INF
    s = random_metric(rng_for(9), 4)
    sub = s.subspace(["p0", "p2"])
    assert apx.totality_defect(apx.from_isometry(sub, s, {"p0": "p0", "p2": "p2"})) == 0


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_defect_formulas_agree(seed):
    phi, _, _ = triple(rng_for(seed))
    assert apx.totality_defect_star(phi) == apx.totality_defect_maxmin(phi)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(0, 24))
def test_totality_is_downward_closed(seed, k):
    rng = rng_for(seed)
    phi, _, _ = triple(rng)
    eps = F(k, 8)
    # lower phi by taking the min with another valid table sharing the spaces
    other = random_apx(rng, phi.source, phi.target)
    psi = ApproximateIsometry(phi.source, phi.target, tuple(
        tuple(min(a, b) for a, b in zip(r1, r2)) for r1, r2 in zip(phi.values, other.values)))
    if not apx.validate_apx(psi):
        psi = apx.ApproximateIsometry(phi.source, phi.target, phi.values)
    assert psi <= phi
    if apx.is_epsilon_total(phi, eps):
        assert apx.is_epsilon_total(psi, eps)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 5))
def test_zero_bijective_is_bijective_isometry(seed, n):
    rng = rng_for(seed)
    X = random_metric(rng, n)
    perm = rng.sample(X.points, n)
    Y = FiniteMetricSpace(tuple(f"q{i}" for i in range(n)),
                          tuple(tuple(X.d(perm[i], perm[j]) for j in range(n)) for i in range(n)))
    alpha = {perm[i]: f"q{i}" for i in range(n)}
    phi = apx.from_isometry(X, Y, alpha)
    assert apx.is_epsilon_bijective(phi, 0)
    assert apx.as_bijection(phi) == alpha
    assert apx.from_isometry(X, Y, apx.as_bijection(phi)) == phi


# --- strict domination / interpolation ---------------------------------------

def test_strict_domination_examples():
    phi, _, _ = triple(rng_for(21))
    assert apx.strictly_dominates(apx.relax(phi, 1), phi)
    assert not apx.strictly_dominates(phi, phi)
    X, Y = phi.source, phi.target
    assert apx.strictly_dominates(apx.all_inf(X, Y), apx.all_inf(X, Y))


def test_interpolant_single_level():
    X = space("x", [[0]])
    Y = space("y", [[0]])
    psi = table(X, Y, [["3/2"]])
    rho = apx.strict_interpolant(apx.relax(psi, 1), psi)
    assert F(3, 2) < rho("x", "y") < F(5, 2)


def test_interpolant_two_levels():
    X = space("x", [[0]])
    Y = FiniteMetricSpace(("y1", "y2"), ((0, 1), (1, 0)))
    psi = table(X, Y, [[1, 2]])
    phi = apx.relax(psi, F(1, 2))
    rho = apx.strict_interpolant(phi, psi)
    assert apx.validate_apx(rho)
    assert apx.strictly_dominates(rho, psi) and apx.strictly_dominates(phi, rho)


def test_interpolant_rejects_non_strict():
    phi, _, _ = triple(rng_for(4))
    with pytest.raises(DominationError):
        apx.strict_interpolant(phi, phi)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_interpolant_property(seed):
    rng = rng_for(seed)
    psi, _, _ = triple(rng)
    if not psi.is_finite():
        return
    phi = apx.relax(psi, F(rng.randint(1, 16), 16))
    if rng.random() < 0.5:
        phi = apx.all_inf(psi.source, psi.target)
    rho = apx.strict_interpolant(phi, psi)
    assert apx.validate_apx(rho)
    assert all(isinstance(v, F) for v in rho.entries())
    assert apx.strictly_dominates(rho, psi) and apx.strictly_dominates(phi, rho)


# --- perturbation ------------------------------------------------------------

def test_perturbation_trivial_and_precondition():
    phi, _, _ = triple(rng_for(31))
    X, Y = phi.source, phi.target
    X0, Y0 = X.points[:1], Y.points[:1]
    assert apx.verify_perturbation(phi, X0, Y0, X0, Y0, 1) is Perturbation.HOLDS
    far = [p for p in X.points if X.d(p, X0[0]) > F(1, 100)]
    if far:
        res = apx.verify_perturbation(phi, X0, Y0, far, Y0, F(1, 100))
        assert res is Perturbation.PRECONDITION_FAILED and not res


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_perturbation_holds_in_neighborhoods(seed):
    rng = rng_for(seed)
    phi, _, _ = triple(rng)
    X, Y = phi.source, phi.target
    X0 = rng.sample(X.points, rng.randint(1, len(X)))
    Y0 = rng.sample(Y.points, rng.randint(1, len(Y)))
    eps = F(rng.randint(1, 64), 8)
    r = eps / 5
    X0p = [p for p in X.points if apx.within(X, [p], X0, r)]
    Y0p = [p for p in Y.points if apx.within(Y, [p], Y0, r)]
    X0p = rng.sample(X0p, rng.randint(0, len(X0p)))
    Y0p = rng.sample(Y0p, rng.randint(0, len(Y0p)))
    assert apx.verify_perturbation(phi, X0, Y0, X0p, Y0p, eps) is Perturbation.HOLDS
