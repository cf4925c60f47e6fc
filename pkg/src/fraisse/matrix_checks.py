"""Numerical checks of the partial-trace estimate for almost-commuting matrices.

Matrices in M_m (x) M_n are reshaped as a[i, k, j, l] =
<e_i (x) e_k, a (e_j (x) e_l)>, so 1 (x) e_ij acts on the second factor and
a = sum_ij a_ij (x) e_ij with a_ij = a[:, i, :, j]. This is the only
floating-point module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-9


def opnorm(x: np.ndarray) -> float:
    """Largest singular value."""
    if x.size == 0:
        return 0.0
    return float(np.linalg.svd(x, compute_uv=False)[0])


def _check(a: np.ndarray, m: int, n: int) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.shape != (m * n, m * n):
        raise ValueError(f"expected a {m * n}x{m * n} matrix, got {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix has non-finite entries")
    return a


def unit(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1
    return e


def partial_trace_projection(a, m: int, n: int) -> np.ndarray:
    """(1 (x) tr)(a) = b (x) 1 with b = sum_k a_kk / n in block notation."""
    a = _check(a, m, n)
    blocks = a.reshape(m, n, m, n)
    b = np.einsum("ikjk->ij", blocks) / n
    return np.kron(b, np.eye(n))


def opnorms(xs: np.ndarray) -> np.ndarray:
    """Largest singular values of a stack of matrices."""
    if xs.shape[-1] == 0:
        return np.zeros(xs.shape[:-2])
    return np.linalg.svd(xs, compute_uv=False)[..., 0]


def commutators(a, m: int, n: int) -> np.ndarray:
    """Stack of a (1 (x) e_ij) - (1 (x) e_ij) a, indexed by i * n + j."""
    a = _check(a, m, n)
    blocks = a.reshape(m, n, m, n)
    C = np.zeros((n, n, m, n, m, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            C[i, j, :, :, :, j] += blocks[:, :, :, i]
            C[i, j, :, i, :, :] -= blocks[:, j, :, :]
    return C.reshape(n * n, m * n, m * n)


def commutator_defect(a, m: int, n: int) -> float:
    """max_ij ||a (1 (x) e_ij) - (1 (x) e_ij) a||."""
    return float(opnorms(commutators(a, m, n)).max())


def batch_projections(stack: np.ndarray, m: int, n: int) -> np.ndarray:
    """partial_trace_projection over a stack of shape (T, mn, mn)."""
    T = stack.shape[0]
    b = np.einsum("tikjk->tij", stack.reshape(T, m, n, m, n)) / n
    return np.einsum("tij,kl->tikjl", b, np.eye(n)).reshape(T, m * n, m * n)


def _batch_commutators(stack: np.ndarray, m: int, n: int) -> np.ndarray:
    T = stack.shape[0]
    blocks = stack.reshape(T, m, n, m, n)
    C = np.zeros((T, n, n, m, n, m, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            C[:, i, j, :, :, :, j] += blocks[:, :, :, :, i]
            C[:, i, j, :, i, :, :] -= blocks[:, :, j, :, :]
    return C.reshape(T, n * n, m * n, m * n)


def batch_defects(stack: np.ndarray, m: int, n: int) -> np.ndarray:
    """commutator_defect over a stack of shape (T, mn, mn)."""
    return opnorms(_batch_commutators(stack, m, n)).max(axis=1)


def certify_bound(stack: np.ndarray, m: int, n: int, tol: float = NORM_TOL):
    """Decide ||a - (1 (x) tr)(a)|| <= n^2 defect(a) + tol for each matrix of a stack.

    ||x|| >= ||x||_F / sqrt(mn) bounds the defect from below without an SVD;
    a matrix passing with that lower bound passes with the defect itself.
    Only the rest get the exact defect. Returns (ok, distances, exact_count).
    """
    dist = opnorms(stack - batch_projections(stack, m, n))
    C = _batch_commutators(stack, m, n)
    lower = np.sqrt(np.einsum("tkij,tkij->tk", C, C.conj()).real).max(axis=1) / np.sqrt(m * n)
    ok = dist <= n * n * lower + tol
    todo = np.flatnonzero(~ok)
    if todo.size:
        ok[todo] = dist[todo] <= n * n * opnorms(C[todo]).max(axis=1) + tol
    return ok, dist, int(todo.size)


@dataclass
class BoundCheck:
    ok: bool
    defect: float
    distance: float
    bound: float
    margin: float
    block_ok: bool
    block_margin: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def verify_almost_commuting_bound(a, m: int, n: int, tol: float = NORM_TOL) -> BoundCheck:
    """Check ||a - (1 (x) tr)(a)|| <= n^2 eps + tol and the per-block estimate.

    eps is the commutator defect. The per-block estimate is
    ||a_ij (x) e_ij - delta_ij (sum_k a_kk / n) (x) e_ii|| <= eps + tol, where
    a_ij is the m x m matrix of (i, j) entries of the second factor.
    """
    a = _check(a, m, n)
    eps = commutator_defect(a, m, n)
    dist = opnorm(a - partial_trace_projection(a, m, n))
    bound = n * n * eps + tol
    blocks = a.reshape(m, n, m, n)
    avg = np.einsum("ikjk->ij", blocks) / n
    # ||x (x) e_ij|| = ||x||, so the block terms are m x m norms
    terms = np.stack([blocks[:, i, :, j] - (avg if i == j else 0) for i in range(n) for j in range(n)])
    block_margin = float(eps + tol - opnorms(terms).max())
    return BoundCheck(dist <= bound, eps, dist, bound, bound - dist, block_margin >= 0, block_margin)


def random_complex(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))


def sweep(m: int, n: int, trials: int, seed: int, near_commuting: float = 0.0) -> dict:
    """Random instances; near_commuting > 0 perturbs b (x) 1 by that scale."""
    rng = np.random.default_rng(seed)
    margins, fails, block_fails = [], 0, 0
    for _ in range(trials):
        if near_commuting:
            a = np.kron(random_complex(rng, m), np.eye(n)) + near_commuting * random_complex(rng, m * n)
        else:
            a = random_complex(rng, m * n)
        r = verify_almost_commuting_bound(a, m, n)
        fails += not r.ok
        block_fails += not r.block_ok
        margins.append(r.margin / r.bound if r.bound else 0.0)
    hist, edges = np.histogram(margins, bins=10, range=(0.0, 1.0))
    return {
        "m": m,
        "n": n,
        "trials": trials,
        "seed": seed,
        "failures": fails,
        "block_failures": block_fails,
        "min_relative_margin": round(float(min(margins)), 12) if margins else None,
        "histogram": {"edges": [round(float(e), 3) for e in edges], "counts": [int(c) for c in hist]},
    }
