import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helly.errors import InvalidDecomposition
from helly.john import john_form
from helly.model import generate_instance
from helly.sparsify import bss_select, gamma_d, lift_decomposition, step_budget

from conftest import isotropic


def eig_bounds(u, w):
    A = (u * w[:, None]).T @ u
    e = np.linalg.eigvalsh(A)
    return e[0], e[-1]


@pytest.mark.parametrize("d", [2, 4, 9, 1.5, 3.7])
def test_gamma_d_closed_form(d):
    sd = mpmath.sqrt(d)
    assert gamma_d(d) == pytest.approx(float(((sd + 1) / (sd - 1)) ** 2), rel=1e-14)


def test_gamma_d_reference_values():
    assert gamma_d(2) == pytest.approx(float((mpmath.sqrt(2) + 1) ** 4), rel=1e-14)
    assert gamma_d(2) == pytest.approx(33.9706, abs=1e-4)
    assert gamma_d(4) == pytest.approx(9.0, rel=1e-14)
    assert gamma_d(9) == pytest.approx(4.0, rel=1e-14)


def test_step_budget():
    assert step_budget(4, 3) == 12
    assert step_budget(2.5, 3) == 8
    assert step_budget(1.1, 10) == 11


def test_orthonormal_basis_is_kept():
    sd = bss_select(np.eye(4), np.ones(4), 2)
    np.testing.assert_array_equal(sd.sigma, np.arange(4))
    np.testing.assert_allclose(sd.weights, 1.0)
    assert sd.certificate.gamma_achieved == pytest.approx(1.0)


def test_signed_basis():
    u = np.vstack([np.eye(3), -np.eye(3)])
    sd = bss_select(u, np.full(6, 0.5), 4)
    assert sd.size <= 12
    assert sd.certificate.gamma_achieved <= 9


def test_signed_basis_without_shortcut():
    u = np.vstack([np.eye(3), -np.eye(3)])
    sd = bss_select(u, np.full(6, 0.5), 4, shortcut=False)
    assert sd.size <= 12 and sd.steps == 12
    lo, hi = eig_bounds(u[sd.sigma], sd.weights)
    assert lo >= 1 - 1e-7 and hi / lo <= 9 * (1 + 1e-7)


def test_forty_random_vectors_d2():
    u, a = isotropic(np.random.default_rng(7), 40, 3)
    sd = bss_select(u, a, 2)
    assert sd.size <= 6
    lo, hi = eig_bounds(u[sd.sigma], sd.weights)
    assert lo >= 1 - 1e-7
    assert hi / lo <= gamma_d(2) * (1 + 1e-7)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(2, 6),
    d=st.floats(1.3, 12.0),
    extra=st.integers(1, 40),
    shortcut=st.booleans(),
)
def test_certificate_holds(seed, n, d, extra, shortcut):
    m = step_budget(d, n) + extra
    u, a = isotropic(np.random.default_rng(seed), m, n)
    sd = bss_select(u, a, d, shortcut=shortcut)
    assert sd.size <= math.ceil(d * n - 1e-9)
    assert len(set(sd.sigma.tolist())) == sd.size
    assert np.all(sd.weights > 0)
    # independent eigensolve of the reweighted sum
    lo, hi = eig_bounds(u[sd.sigma], sd.weights)
    assert lo >= 1 - 1e-7
    assert hi / lo <= gamma_d(d) * (1 + 1e-7)
    assert sd.certificate.lambda_min == pytest.approx(lo, rel=1e-10)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5))
def test_permutation_keeps_guarantee(seed, n):
    r = np.random.default_rng(seed)
    u, a = isotropic(r, 6 * n, n)
    perm = r.permutation(len(a))
    for uu, aa in ((u, a), (u[perm], a[perm])):
        sd = bss_select(uu, aa, 3)
        lo, hi = eig_bounds(uu[sd.sigma], sd.weights)
        assert sd.size <= 3 * n and hi / lo <= gamma_d(3) * (1 + 1e-7)


def test_larger_d_also_certified(rng):
    u, a = isotropic(rng, 60, 4)
    for d in (2, 3, 5, 8):
        sd = bss_select(u, a, d)
        assert sd.certificate.gamma_achieved <= gamma_d(d) * (1 + 1e-7)


def test_deterministic(rng):
    u, a = isotropic(rng, 30, 3)
    s1, s2 = bss_select(u, a, 2), bss_select(u, a, 2)
    np.testing.assert_array_equal(s1.sigma, s2.sigma)
    np.testing.assert_array_equal(s1.weights, s2.weights)


def test_rejects_bad_input(rng):
    u, a = isotropic(rng, 10, 3)
    with pytest.raises(InvalidDecomposition):
        bss_select(u, 1.01 * a, 2)
    with pytest.raises(InvalidDecomposition):
        bss_select(u, a, 1.0)
    with pytest.raises(InvalidDecomposition):
        bss_select(u, -a, 2)


def test_lift_single_vector_norm():
    v, _ = lift_decomposition(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]), np.full(4, 0.5))
    np.testing.assert_allclose(v[0], math.sqrt(2 / 3) * np.array([-1.0, 0.0, 1 / math.sqrt(2)]), atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-9)


def test_lift_cube_contacts():
    u = np.vstack([np.eye(2), -np.eye(2)])
    v, b = lift_decomposition(u, np.full(4, 0.5))
    np.testing.assert_allclose((v * b[:, None]).T @ v, np.eye(3), atol=1e-9)


def test_lift_simplex_contacts():
    _, jf = john_form(generate_instance("simplex", 2))
    v, b = lift_decomposition(jf.contacts, jf.weights)
    assert np.linalg.norm((v * b[:, None]).T @ v - np.eye(3)) <= 1e-5
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-9)


def test_lift_requires_centered_decomposition():
    with pytest.raises(InvalidDecomposition):
        lift_decomposition(np.eye(2), np.ones(2))
