"""Deterministic spectral sparsification of a John decomposition.

Given unit vectors ``u_j`` and weights ``a_j`` with ``sum a_j u_j u_j^T = I_n``,
:func:`bss_select` keeps at most ``ceil(d n)`` of them, reweighted, so that the
new sum ``A`` satisfies ``I <= A <= gamma_d I`` with
``gamma_d = ((sqrt(d) + 1) / (sqrt(d) - 1))**2``.

The construction is the two-sided barrier method of Batson, Spielman and
Srivastava: an upper barrier ``u`` and a lower barrier ``l`` move by fixed
amounts each step, and a rank-one update is chosen so that neither potential

    Phi^u(A) = tr (u I - A)^{-1},    Phi_l(A) = tr (A - l I)^{-1}

increases.  With the starting values below the barrier ratio after
``ceil(d n)`` steps is at most ``gamma_d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BarrierStall, InternalCheckFailed, InvalidDecomposition
from .linalg import SandwichCertificate, inv_sqrt_psd, rank_one_sum, sandwich_gamma, sym

INPUT_RESIDUAL_TOL = 1e-5
LIFT_RESIDUAL_TOL = 1e-4
CERT_RTOL = 1e-7
ADMISSIBLE_RTOL = 1e-10


def gamma_d(d):
    return ((math.sqrt(d) + 1) / (math.sqrt(d) - 1)) ** 2


def step_budget(d, n):
    """Number of barrier steps, ``ceil(d n)`` with a guard against ``d n`` landing a hair above an integer."""
    return math.ceil(d * n - 1e-9)


@dataclass(frozen=True, eq=False)
class SparseDecomposition:
    """Reweighted sub-family ``A = sum_{j in sigma} weights_j u_j u_j^T``."""

    sigma: np.ndarray
    weights: np.ndarray
    A: np.ndarray
    certificate: SandwichCertificate
    d: float
    steps: int

    @property
    def size(self):
        return len(self.sigma)


def decomposition_residual(u, a):
    n = u.shape[1]
    return float(np.linalg.norm(np.eye(n) - rank_one_sum(u, a)))


def _finish(u, a, sigma, weights, d, steps, scale):
    weights = weights / scale
    A = rank_one_sum(u[sigma], weights)
    cert = sandwich_gamma(A)
    if cert.lambda_min < 1.0:
        weights = weights / cert.lambda_min
        A = rank_one_sum(u[sigma], weights)
        cert = sandwich_gamma(A)
    n = u.shape[1]
    if len(sigma) > step_budget(d, n) or cert.gamma_achieved > gamma_d(d) * (1 + CERT_RTOL):
        raise InternalCheckFailed(
            "sparsifier certificate violated",
            {"size": len(sigma), "gamma_achieved": cert.gamma_achieved, "gamma_d": gamma_d(d)},
        )
    return SparseDecomposition(np.asarray(sigma), weights, A, cert, float(d), steps)


def bss_select(u, a, d, shortcut=True) -> SparseDecomposition:
    """Pick at most ``ceil(d n)`` reweighted vectors forming a ``gamma_d``-approximate decomposition.

    Parameters
    ----------
    u : array_like, shape (m, n)
        Unit vectors.
    a : array_like, shape (m,)
        Positive weights with ``sum a_j u_j u_j^T = I`` up to ``1e-5``.
    d : float
        Size/quality trade-off, ``d > 1``.
    shortcut : bool
        When ``m <= ceil(d n)`` the input already meets the size cap and is
        returned unchanged (``gamma`` is then essentially 1).

    Raises
    ------
    InvalidDecomposition
        Input residual above ``1e-5`` or ``d <= 1``.
    BarrierStall
        No admissible vector at some step; ``exc.step`` records which.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    a = np.asarray(a, dtype=float)
    m, n = u.shape
    if not d > 1:
        raise InvalidDecomposition(f"d must exceed 1, got {d}")
    if np.any(a <= 0):
        raise InvalidDecomposition("weights must be positive")
    residual = decomposition_residual(u, a)
    if residual > INPUT_RESIDUAL_TOL:
        raise InvalidDecomposition(f"input decomposition residual {residual:.2e} exceeds {INPUT_RESIDUAL_TOL}")
    q = step_budget(d, n)
    if shortcut and m <= q:
        return _finish(u, a, np.arange(m), a.copy(), d, 0, 1.0)

    # whiten so the working vectors sum to the identity to rounding accuracy
    M = rank_one_sum(u, a)
    W = inv_sqrt_psd(M)
    w = (u @ W) * np.sqrt(a)[:, None]

    sd = math.sqrt(d)
    delta_l = 1.0
    delta_u = (sd + 1) / (sd - 1)
    lower = -n * sd
    upper = n * (d + sd) / (sd - 1)
    A = np.zeros((n, n))
    s = np.zeros(m)
    eye = np.eye(n)
    for step in range(q):
        new_upper = upper + delta_u
        new_lower = lower + delta_l
        UI = np.linalg.inv(new_upper * eye - A)
        LI = np.linalg.inv(A - new_lower * eye)
        phi_u = np.trace(np.linalg.inv(upper * eye - A))
        phi_l = np.trace(np.linalg.inv(A - lower * eye))
        wU = w @ UI
        wL = w @ LI
        U_vals = np.einsum("ij,ij->i", wU @ UI, w) / (phi_u - np.trace(UI)) + np.einsum("ij,ij->i", wU, w)
        L_vals = np.einsum("ij,ij->i", wL @ LI, w) / (np.trace(LI) - phi_l) - np.einsum("ij,ij->i", wL, w)
        gap = L_vals - U_vals
        ok = gap >= -ADMISSIBLE_RTOL * np.maximum(1.0, np.abs(L_vals))
        if not ok.any():
            raise BarrierStall(f"no admissible vector at step {step}", step=step)
        candidates = np.flatnonzero(ok)
        j = candidates[np.argmin(gap[candidates])]  # argmin keeps the lowest index on ties
        t = 2.0 / (U_vals[j] + L_vals[j])
        A = sym(A + t * np.outer(w[j], w[j]))
        s[j] += t
        upper, lower = new_upper, new_lower
        eig = np.linalg.eigvalsh(A)
        if eig[0] <= lower or eig[-1] >= upper:
            raise BarrierStall(f"eigenvalues left the barriers at step {step}", step=step)

    sigma = np.flatnonzero(s > 0)
    return _finish(u, a, sigma, s[sigma] * a[sigma], d, q, lower)


def lift_decomposition(u, a):
    """Lift a centered John decomposition in R^n to an identity decomposition in R^{n+1}.

    ``v_j = sqrt(n/(n+1)) * (-u_j, 1/sqrt(n))`` and ``b_j = (n+1)/n * a_j``.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    a = np.asarray(a, dtype=float)
    n = u.shape[1]
    res_id = decomposition_residual(u, a)
    res_bar = float(np.linalg.norm(a @ u))
    if res_id > INPUT_RESIDUAL_TOL or res_bar > INPUT_RESIDUAL_TOL:
        raise InvalidDecomposition(f"input residuals identity={res_id:.2e} barycenter={res_bar:.2e}")
    scale = math.sqrt(n / (n + 1))
    v = np.hstack([-u, np.full((len(u), 1), 1.0 / math.sqrt(n))]) * scale
    b = a * (n + 1) / n
    lifted = decomposition_residual(v, b)
    if lifted > LIFT_RESIDUAL_TOL:
        raise InvalidDecomposition(f"lifted residual {lifted:.2e} exceeds {LIFT_RESIDUAL_TOL}")
    return v, b

