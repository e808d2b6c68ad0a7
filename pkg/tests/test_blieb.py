import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from helly.blieb import bl_gaussian_search, check_det_inequality, kappa_weights, log_F
from helly.errors import NotDominatingIdentity
from helly.john import john_form
from helly.model import generate_instance
from helly.sparsify import bss_select

from conftest import isotropic, random_orthogonal


def bss_output(seed, n, d, m=None):
    r = np.random.default_rng(seed)
    u, a = isotropic(r, m or 4 * n * int(math.ceil(d)), n)
    sd = bss_select(u, a, d)
    return u[sd.sigma], sd.weights, sd


def test_cube_contacts_identity():
    u = np.vstack([np.eye(3), -np.eye(3)])
    w = kappa_weights(u, np.full(6, 0.5))
    np.testing.assert_allclose(w.kappa, 0.5)
    assert w.kappa.sum() == pytest.approx(3)
    w2 = kappa_weights(u, np.ones(6))
    np.testing.assert_allclose(w2.kappa, 0.5)
    assert w2.gamma == pytest.approx(2)


def test_not_dominating():
    with pytest.raises(NotDominatingIdentity):
        kappa_weights(np.eye(2), [0.5, 1.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.sampled_from([2.0, 4.0, 9.0]))
def test_kappa_invariants(seed, n, d):
    u, c, _ = bss_output(seed, n, d)
    w = kappa_weights(u, c)
    assert np.all(w.kappa > 0)
    assert abs(w.kappa.sum() - n) <= 1e-9
    assert np.all(w.gamma * w.kappa >= c - 1e-9)
    # trace oracle: sum kappa = tr(A^{-1} A)
    assert w.kappa.sum() == pytest.approx(np.trace(np.linalg.solve(w.A, w.A)), abs=1e-9)


def test_inequality_at_identity():
    u = np.vstack([np.eye(2), -np.eye(2)])
    w = kappa_weights(u, np.full(4, 0.5))
    lhs, rhs, holds = check_det_inequality(w, np.ones(4))
    assert lhs == pytest.approx(0, abs=1e-15) and rhs == 0 and holds


def test_equal_lambdas_scale_out(rng):
    # with all lambda equal, lhs - rhs does not depend on lambda because sum kappa = n
    u, c, _ = bss_output(3, 3, 4)
    w = kappa_weights(u, c)
    gaps = [np.subtract(*check_det_inequality(w, np.full(len(c), lam))[:2]) for lam in (0.01, 1.0, 37.0)]
    np.testing.assert_allclose(gaps, gaps[1], atol=1e-10)


def test_inequality_random_lambdas():
    for seed in range(10):
        u, c, _ = bss_output(seed, 2 + seed % 4, 4)
        w = kappa_weights(u, c)
        r = np.random.default_rng(seed)
        for _ in range(100):
            assert check_det_inequality(w, r.uniform(0.1, 10, len(c)))[2]


def test_inequality_survives_extreme_lambdas():
    u, c, _ = bss_output(1, 6, 2)
    w = kappa_weights(u, c)
    r = np.random.default_rng(0)
    lam = np.exp(r.uniform(-300, 300, len(c)))
    lhs, rhs, holds = check_det_inequality(w, lam)
    assert math.isfinite(lhs) and math.isfinite(rhs) and holds
    # high-precision oracle for the determinant term
    with mpmath.workdps(800):
        M = mpmath.zeros(6, 6)
        for uj, kj, lj in zip(u, w.kappa, lam):
            v = mpmath.matrix([mpmath.mpf(x) for x in uj])
            M += mpmath.mpf(kj) * mpmath.mpf(lj) * (v * v.T)
        exact = 6 * mpmath.log(w.gamma) + mpmath.log(mpmath.det(M))
    assert lhs == pytest.approx(float(exact), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_domination(seed, n):
    u, c, _ = bss_output(seed, n, 4)
    w = kappa_weights(u, c)
    lam = np.random.default_rng(seed).uniform(0.1, 10, len(c))
    lhs = w.gamma * (u * (w.kappa * lam)[:, None]).T @ u
    rhs = (u * (c * lam)[:, None]).T @ u
    assert np.linalg.eigvalsh(lhs - rhs)[0] >= -1e-9


def test_search_exact_john_gives_one():
    for fam in (generate_instance("cube", 3), generate_instance("simplex", 3), generate_instance("cross", 2)):
        _, jf = john_form(fam)
        w = kappa_weights(jf.contacts, jf.weights)
        res = bl_gaussian_search(w)
        assert res.D_estimate == pytest.approx(1.0, abs=1e-7)


def test_search_orthonormal_is_flat(rng):
    Q = random_orthogonal(rng, 4)
    w = kappa_weights(Q, np.ones(4))
    for _ in range(5):
        x = rng.normal(size=4)
        assert log_F(w, x) == pytest.approx(0.0, abs=1e-12)
    assert bl_gaussian_search(w).F_estimate == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.sampled_from([2.0, 4.0, 9.0]))
def test_search_brackets(seed, n, d):
    u, c, sd = bss_output(seed, n, d)
    w = kappa_weights(u, c)
    res = bl_gaussian_search(w)
    g = sd.certificate.gamma_achieved
    at_one = math.exp(log_F(w, np.zeros(len(c))))
    assert res.F_estimate <= at_one * (1 + 1e-12)
    assert res.F_estimate >= g ** (-n) - 1e-9
    assert res.F_estimate <= 1 + 1e-9
    assert res.D_estimate <= g ** (n / 2) * (1 + 1e-7)


def test_search_agrees_with_generic_optimizer():
    for seed in range(5):
        u, c, _ = bss_output(seed, 3, 2)
        w = kappa_weights(u, c)
        res = bl_gaussian_search(w, iterations=500)
        ref = minimize(lambda x: log_F(w, x), np.zeros(len(c)), method="BFGS", options={"gtol": 1e-10})
        # both are upper estimates of the infimum; coordinate descent must do at least as well
        assert math.log(res.F_estimate) <= ref.fun + 1e-5
        assert res.converged
