import numpy as np
import pytest

from helly.linalg import inv_sqrt_psd

ACCEPTANCE_LINES = []


def isotropic(rng, m, n):
    """Unit vectors ``u`` and weights ``a`` with ``sum a_j u_j u_j^T = I`` exactly up to rounding."""
    X = rng.standard_normal((m, n))
    W = X @ inv_sqrt_psd(X.T @ X)
    a = np.sum(W**2, axis=1)
    return W / np.sqrt(a)[:, None], a


def random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_invertible(rng, n, cond=20.0):
    s = np.exp(rng.uniform(0, np.log(cond), n))
    return random_orthogonal(rng, n) @ np.diag(s) @ random_orthogonal(rng, n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
