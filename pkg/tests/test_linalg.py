import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helly.errors import SingularMatrix
from helly.linalg import (
    det,
    det_rank_one_update,
    inv_sqrt_psd,
    lu_factor,
    lu_solve,
    rank_one_sum,
    sandwich_gamma,
    sqrt_psd,
    subset_det_expansion,
)

from conftest import random_orthogonal


def test_rank_one_update_examples():
    assert det_rank_one_update(np.eye(2), [1, 0], [1, 0]) == pytest.approx(2.0)
    assert det_rank_one_update(np.diag([2.0, 3.0]), [1, 0], [0, 1]) == pytest.approx(6.0)


def test_rank_one_update_matches_direct_determinant(rng):
    for _ in range(1000):
        n = rng.integers(2, 7)
        A = rng.standard_normal((n, n)) + n * np.eye(n)
        u, v = rng.standard_normal((2, n))
        direct = np.linalg.det(A + np.outer(u, v))
        assert abs(det_rank_one_update(A, u, v) - direct) <= 1e-10 * abs(direct)


def test_rank_one_update_singular():
    with pytest.raises(SingularMatrix):
        det_rank_one_update(np.zeros((2, 2)), [1, 0], [0, 1])


@settings(max_examples=60, deadline=None)
@given(arrays(float, (4, 4), elements=st.floats(-3, 3)), arrays(float, 4, elements=st.floats(-3, 3)))
def test_lu_solve_and_det_agree_with_numpy(M, rhs):
    A = M + 13 * np.eye(4)  # diagonally dominant, well conditioned
    f = lu_factor(A)
    np.testing.assert_allclose(lu_solve(f, rhs), np.linalg.solve(A, rhs), rtol=1e-10, atol=1e-12)
    assert det(A) == pytest.approx(np.linalg.det(A), rel=1e-10)


def test_lu_rejects_singular_and_nonsquare():
    with pytest.raises(SingularMatrix):
        lu_factor(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(ValueError):
        lu_factor(np.ones((2, 3)))


def test_sandwich_examples():
    c = sandwich_gamma(np.eye(3))
    assert (c.lambda_min, c.lambda_max, c.gamma_achieved) == pytest.approx((1, 1, 1))
    c = sandwich_gamma(np.diag([1.0, 2.0, 4.0]))
    assert (c.lambda_min, c.lambda_max, c.gamma_achieved) == pytest.approx((1, 4, 4))
    assert c.dominates_identity
    assert not sandwich_gamma(0.5 * np.eye(2)).dominates_identity


def _is_pd(M):
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return False
    return True


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_sandwich_brackets_eigenvalues(seed, n):
    # Cholesky succeeds just below lambda_min and fails just above it
    r = np.random.default_rng(seed)
    X = r.standard_normal((n + 3, n))
    A = X.T @ X + 0.1 * np.eye(n)
    c = sandwich_gamma(A)
    eps = 1e-8 * c.lambda_max
    assert _is_pd(A - (c.lambda_min - eps) * np.eye(n))
    assert not _is_pd(A - (c.lambda_min + eps) * np.eye(n))
    assert _is_pd((c.lambda_max + eps) * np.eye(n) - A)
    assert not _is_pd((c.lambda_max - eps) * np.eye(n) - A)
    assert c.lambda_min <= c.lambda_max and c.gamma_achieved >= 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_sandwich_orthogonal_invariance(seed, n):
    r = np.random.default_rng(seed)
    X = r.standard_normal((2 * n, n))
    A = X.T @ X + np.eye(n)
    Q = random_orthogonal(r, n)
    a, b = sandwich_gamma(A), sandwich_gamma(Q.T @ A @ Q)
    assert abs(a.lambda_min - b.lambda_min) <= 1e-9
    assert abs(a.lambda_max - b.lambda_max) <= 1e-9 * max(1, a.lambda_max)
    assert abs(a.gamma_achieved - b.gamma_achieved) <= 1e-9 * a.gamma_achieved


def test_cauchy_binet_identity(rng):
    for _ in range(100):
        n = rng.integers(1, 5)
        m = rng.integers(n, 11)
        U = rng.standard_normal((m, n))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        c, lam = rng.uniform(0.1, 2, (2, m))
        direct = np.linalg.det(rank_one_sum(U, c * lam))
        assert abs(subset_det_expansion(U, c, lam) - direct) <= 1e-9 * abs(direct)


def test_psd_roots(rng):
    X = rng.standard_normal((6, 4))
    A = X.T @ X
    R = inv_sqrt_psd(A)
    np.testing.assert_allclose(R @ A @ R, np.eye(4), atol=1e-10)
    S = sqrt_psd(A)
    np.testing.assert_allclose(S @ S, A, atol=1e-10)
    with pytest.raises(SingularMatrix):
        inv_sqrt_psd(-np.eye(2))


def test_rank_one_sum_is_exactly_symmetric(rng):
    U = rng.standard_normal((9, 5))
    A = rank_one_sum(U, rng.random(9))
    assert np.array_equal(A, A.T)
