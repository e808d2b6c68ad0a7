"""Brascamp-Lieb weights for approximate John decompositions.

For unit vectors ``u_j`` and weights ``c_j`` with ``I <= A = sum c_j u_j u_j^T <= gamma I``
the exponents ``kappa_j = c_j <A^{-1} u_j, u_j>`` sum to ``n`` and give

    gamma^n det(sum kappa_j lambda_j u_j u_j^T) >= prod lambda_j^kappa_j

for every ``lambda > 0``.  Hence the Gaussian Brascamp-Lieb constant
``D = F^{-1/2}`` with ``F = inf det(...) / prod lambda_j^kappa_j`` is at most
``gamma^{n/2}``.  Everything is evaluated in log space.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import NotDominatingIdentity
from .linalg import DOMINATION_TOL, rank_one_sum, sandwich_gamma

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BLWeights:
    u: np.ndarray
    c: np.ndarray
    A: np.ndarray
    kappa: np.ndarray
    gamma: float

    @property
    def dim(self):
        return self.u.shape[1]


def kappa_weights(u, c) -> BLWeights:
    """Compute ``kappa_j = c_j <A^{-1} u_j, u_j>``.

    ``gamma`` is ``lambda_max(A)``, the smallest value with ``A <= gamma I``.
    Raises NotDominatingIdentity if ``lambda_min(A) < 1 - 1e-7``.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    c = np.asarray(c, dtype=float)
    A = rank_one_sum(u, c)
    cert = sandwich_gamma(A)
    if cert.lambda_min < 1.0 - DOMINATION_TOL:
        raise NotDominatingIdentity(f"lambda_min(A) = {cert.lambda_min:.3e} < 1")
    Ainv_u = np.linalg.solve(A, u.T).T
    kappa = c * np.einsum("ij,ij->i", Ainv_u, u)
    return BLWeights(u, c, A, kappa, max(cert.lambda_max, 1.0))


def log_det_weighted(u, weights):
    """``log det(sum w_j u_j u_j^T)`` without forming the sum.

    Uses a QR factorization of the rows ``sqrt(w_j) u_j`` sorted by decreasing
    weight, which stays accurate when the weights span hundreds of orders of
    magnitude.
    """
    w = np.asarray(weights, dtype=float)
    keep = w > 0
    if not keep.any():
        return -math.inf
    logw = np.log(w[keep])
    order = np.argsort(-logw, kind="stable")
    shift = float(logw[order[0]])
    rows = np.asarray(u, dtype=float)[keep][order] * np.exp(0.5 * (logw[order] - shift))[:, None]
    n = rows.shape[1]
    if rows.shape[0] < n:
        return -math.inf
    diag = np.abs(np.diag(np.linalg.qr(rows, mode="r")))
    if np.any(diag == 0):
        return -math.inf
    return n * shift + 2.0 * float(np.sum(np.log(diag)))


def check_det_inequality(w: BLWeights, lambdas):
    """Evaluate ``n log gamma + log det(sum kappa lambda u u^T)`` against ``sum kappa log lambda``.

    Returns ``(lhs, rhs, holds)``.
    """
    lam = np.asarray(lambdas, dtype=float)
    n = w.dim
    lhs = n * math.log(w.gamma) + log_det_weighted(w.u, w.kappa * lam)
    rhs = float(w.kappa @ np.log(lam))
    holds = lhs >= rhs - 1e-12 * max(1.0, abs(rhs))
    return lhs, rhs, bool(holds)


def log_F(w: BLWeights, log_lambdas):
    """``log det(sum kappa_j lambda_j u_j u_j^T) - sum kappa_j log lambda_j``."""
    x = np.asarray(log_lambdas, dtype=float)
    return log_det_weighted(w.u, w.kappa * np.exp(x)) - float(w.kappa @ x)


@dataclass(frozen=True)
class GaussianSearchResult:
    F_estimate: float
    lambdas: np.ndarray
    sweeps: int
    converged: bool

    @property
    def D_estimate(self):
        return self.F_estimate ** -0.5


def bl_gaussian_search(w: BLWeights, iterations=200, tol=1e-13) -> GaussianSearchResult:
    """Estimate ``F`` by cyclic coordinate descent over centered Gaussians.

    Each coordinate update is the exact minimizer along that coordinate: with
    ``B`` the sum without term ``j`` and ``q = <B^{-1} u_j, u_j>``, the objective in
    ``lambda_j`` is ``log(1 + kappa_j q lambda_j) - kappa_j log lambda_j``,
    minimized at ``lambda_j = 1 / (q (1 - kappa_j))``.  Coordinates whose
    ``kappa_j`` is 1 (up to rounding) do not affect the objective and are left
    alone.  The search starts from ``lambda = 1`` and never increases the
    objective, so the estimate is an upper bound on ``F``.
    """
    u, kappa = w.u, w.kappa
    s = len(kappa)
    x = np.zeros(s)
    value = log_F(w, x)
    start = value
    converged = False
    sweep = 0
    for sweep in range(1, iterations + 1):
        previous = value
        for j in range(s):
            if kappa[j] >= 1.0 - 1e-12:
                continue
            weights = kappa * np.exp(x)
            A = rank_one_sum(u, weights)
            B = A - weights[j] * np.outer(u[j], u[j])
            try:
                q = float(u[j] @ np.linalg.solve(B, u[j]))
            except np.linalg.LinAlgError:
                continue
            if not q > 0:
                continue
            candidate = x.copy()
            candidate[j] = -math.log(q * (1.0 - kappa[j]))
            new_value = log_F(w, candidate)
            if new_value < value:
                x, value = candidate, new_value
        # F is invariant under lambda -> t*lambda; recentre to keep exponents tame
        x -= x.mean()
        value = log_F(w, x)
        if previous - value <= tol * max(1.0, abs(value)):
            converged = True
            break
    if value > start:
        x, value = np.zeros(s), start
    if not converged:
        log.info("gaussian search stopped after %d sweeps without converging", sweep)
    return GaussianSearchResult(math.exp(value), np.exp(x), sweep, converged)
