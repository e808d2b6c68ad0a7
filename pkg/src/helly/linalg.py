"""Dense symmetric linear algebra for small matrices."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import SingularMatrix

PIVOT_RTOL = 1e-12
DOMINATION_TOL = 1e-7


def sym(A):
    """Return the symmetric part of ``A`` so later code can rely on exact symmetry."""
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + A.T)


def rank_one_sum(vectors, weights):
    """``sum_j weights[j] * v_j v_j^T`` for the rows ``v_j`` of ``vectors``."""
    V = np.asarray(vectors, dtype=float)
    w = np.asarray(weights, dtype=float)
    return sym((V * w[:, None]).T @ V)


def lu_factor(A):
    """Partial-pivot LU, packed as ``(LU, perm, sign)``.

    Raises SingularMatrix when a pivot falls below ``1e-12 * max|A|``.
    """
    LU = np.array(A, dtype=float)
    n = LU.shape[0]
    if LU.shape != (n, n):
        raise ValueError("matrix must be square")
    perm = np.arange(n)
    sign = 1.0
    threshold = PIVOT_RTOL * max(np.max(np.abs(LU)), np.finfo(float).tiny) if n else 0.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(LU[k:, k])))
        if abs(LU[p, k]) < threshold:
            raise SingularMatrix(f"pivot {k} is {LU[p, k]:.3e}")
        if p != k:
            LU[[k, p]] = LU[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        LU[k + 1:, k] /= LU[k, k]
        LU[k + 1:, k + 1:] -= np.outer(LU[k + 1:, k], LU[k, k + 1:])
    return LU, perm, sign


def lu_solve(factors, rhs):
    LU, perm, _ = factors
    x = np.asarray(rhs, dtype=float)[perm].copy()
    n = LU.shape[0]
    for i in range(n):
        x[i] -= LU[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - LU[i, i + 1:] @ x[i + 1:]) / LU[i, i]
    return x


def lu_det(factors):
    LU, _, sign = factors
    return sign * float(np.prod(np.diag(LU)))


def det(A):
    return lu_det(lu_factor(A))


def det_rank_one_update(A, u, v):
    """``det(A + u v^T)`` computed as ``det(A) * (1 + <A^{-1} u, v>)``."""
    factors = lu_factor(A)
    return lu_det(factors) * (1.0 + float(np.dot(lu_solve(factors, u), v)))


@dataclass(frozen=True)
class SandwichCertificate:
    """Spectral sandwich ``lambda_min * I <= A <= lambda_max * I``."""

    lambda_min: float
    lambda_max: float
    gamma_achieved: float
    dominates_identity: bool

    def as_dict(self):
        return {
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "gamma_achieved": self.gamma_achieved,
            "dominates_identity": self.dominates_identity,
        }


def sandwich_gamma(A) -> SandwichCertificate:
    eig = np.linalg.eigvalsh(sym(A))
    lo, hi = float(eig[0]), float(eig[-1])
    gamma = hi / lo if lo > 0 else float("inf")
    return SandwichCertificate(lo, hi, max(gamma, 1.0), lo >= 1.0 - DOMINATION_TOL)


def inv_sqrt_psd(A):
    """``A^{-1/2}`` for a symmetric positive definite ``A``."""
    w, Q = np.linalg.eigh(sym(A))
    if w[0] <= 0:
        raise SingularMatrix("matrix is not positive definite")
    return sym((Q / np.sqrt(w)) @ Q.T)


def sqrt_psd(A):
    w, Q = np.linalg.eigh(sym(A))
    return sym((Q * np.sqrt(np.clip(w, 0.0, None))) @ Q.T)



def subset_det_expansion(u, c, lambdas):
    """``det(sum c_j lambda_j u_j u_j^T)`` expanded over all ``n``-subsets ``M``.

    Each subset contributes ``prod_{j in M} c_j lambda_j * det(U_M)^2`` where
    ``U_M`` stacks the chosen vectors; singular subsets contribute zero.  Cost
    grows like ``C(m, n)``, so this is for small checks only.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    cl = np.asarray(c, dtype=float) * np.asarray(lambdas, dtype=float)
    m, n = u.shape
    total = 0.0
    for M in combinations(range(m), n):
        M = list(M)
        try:
            dM = det(u[M])
        except SingularMatrix:
            continue
        total += float(np.prod(cl[M])) * dM * dM
    return total
