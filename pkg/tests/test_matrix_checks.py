import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraisse.matrix_checks import (
    batch_defects,
    batch_projections,
    certify_bound,
    commutator_defect,
    commutators,
    opnorm,
    partial_trace_projection,
    random_complex,
    sweep,
    unit,
    verify_almost_commuting_bound,
)

dims = st.integers(1, 4)


def naive_commutators(a, m, n):
    out = []
    for i in range(n):
        for j in range(n):
            u = np.kron(np.eye(m), unit(n, i, j))
            out.append(a @ u - u @ a)
    return np.stack(out)


def naive_projection(a, m, n):
    # (1 (x) tr)(a) (x) 1 through explicit partial trace
    b = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            for k in range(n):
                b[i, j] += a[i * n + k, j * n + k]
    return np.kron(b / n, np.eye(n))


@given(dims, dims, st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_commutators_match_kron_oracle(m, n, seed):
    a = random_complex(np.random.default_rng(seed), m * n)
    assert np.allclose(commutators(a, m, n), naive_commutators(a, m, n))
    assert np.allclose(partial_trace_projection(a, m, n), naive_projection(a, m, n))


@given(dims, dims, st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_projection_idempotent_and_trace_preserving(m, n, seed):
    a = random_complex(np.random.default_rng(seed), m * n)
    p = partial_trace_projection(a, m, n)
    assert np.allclose(partial_trace_projection(p, m, n), p)
    assert np.isclose(np.trace(p), np.trace(a))


def test_fixed_point_b_tensor_one():
    rng = np.random.default_rng(0)
    b = random_complex(rng, 3)
    a = np.kron(b, np.eye(2))
    assert np.allclose(partial_trace_projection(a, 3, 2), a)
    assert commutator_defect(a, 3, 2) < 1e-12


def test_one_tensor_unit_projects_to_zero():
    a = np.kron(np.eye(2), unit(3, 0, 1))
    assert np.allclose(partial_trace_projection(a, 2, 3), 0)
    assert commutator_defect(a, 2, 3) >= 1 - 1e-12


def test_defect_scales_linearly():
    a = random_complex(np.random.default_rng(1), 6)
    assert np.isclose(commutator_defect(3 * a, 2, 3), 3 * commutator_defect(a, 2, 3))


def test_opnorm_of_unit():
    assert opnorm(unit(4, 1, 2)) == pytest.approx(1)


@given(dims, dims, st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_bound_holds_on_random_matrices(m, n, seed):
    r = verify_almost_commuting_bound(random_complex(np.random.default_rng(seed), m * n), m, n)
    assert r.ok and r.block_ok
    assert r.distance <= r.bound


def test_bad_shape_rejected():
    with pytest.raises(ValueError):
        verify_almost_commuting_bound(np.eye(5), 2, 3)


def test_sweep_is_deterministic():
    assert sweep(2, 3, 20, 7) == sweep(2, 3, 20, 7)
    r = sweep(3, 2, 20, 7, near_commuting=1e-3)
    assert r["failures"] == 0 and sum(r["histogram"]["counts"]) == 20


def test_batch_versions_match_single():
    rng = np.random.default_rng(3)
    for m, n in [(1, 1), (2, 3), (3, 2), (4, 4)]:
        stack = np.stack([random_complex(rng, m * n) for _ in range(5)])
        assert np.allclose(batch_defects(stack, m, n), [commutator_defect(a, m, n) for a in stack])
        assert np.allclose(batch_projections(stack, m, n), [partial_trace_projection(a, m, n) for a in stack])


def test_certificate_agrees_with_exact_check():
    rng = np.random.default_rng(4)
    stack = np.stack([random_complex(rng, 6) for _ in range(20)]
                     + [np.kron(random_complex(rng, 2), np.eye(3)) + 1e-4 * random_complex(rng, 6)])
    ok, dist, _ = certify_bound(stack, 2, 3)
    exact = [verify_almost_commuting_bound(a, 2, 3).ok for a in stack]
    assert list(ok) == exact


def test_certificate_falls_back_to_exact_defect():
    # a tolerance so negative that nothing passes forces the exact path
    stack = np.stack([random_complex(np.random.default_rng(5), 4) for _ in range(3)])
    ok, _, exact = certify_bound(stack, 2, 2, tol=-100.0)
    assert exact == 3 and not ok.any()
