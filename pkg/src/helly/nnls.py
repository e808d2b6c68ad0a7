"""Lawson-Hanson active-set nonnegative least squares."""
import numpy as np

from .errors import NoConvergence


def nnls(A, b, maxiter=None, tol=None):
    """Solve ``min |A x - b|_2`` subject to ``x >= 0``.

    Parameters
    ----------
    A : array_like, shape (m, n)
    b : array_like, shape (m,)
    maxiter : int, optional
        Outer iteration budget, default ``3 * n``.
    tol : float, optional
        Dual feasibility tolerance, default ``10 * eps * |A|_1 * max(m, n)``.

    Returns
    -------
    x : ndarray, shape (n,)
    rnorm : float
        ``|A x - b|_2`` evaluated at the returned ``x``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if maxiter is None:
        maxiter = 3 * n
    if tol is None:
        tol = 10 * np.finfo(float).eps * np.linalg.norm(A, 1) * max(m, n)

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ b
    blocked = np.zeros(n, dtype=bool)
    for _ in range(maxiter):
        free = ~passive & ~blocked
        if not free.any() or w[free].max() <= tol:
            break
        j = np.flatnonzero(free)[np.argmax(w[free])]
        passive[j] = True
        first = True
        while True:
            idx = np.flatnonzero(passive)
            s = np.zeros(n)
            s[idx] = np.linalg.lstsq(A[:, idx], b, rcond=None)[0]
            if s[idx].min() > 0:
                break
            if first and s[j] <= 0:
                # rounding made the entering column useless; skip it this round
                passive[j] = False
                blocked[j] = True
                s = x
                break
            first = False
            neg = idx[s[idx] <= 0]
            alpha = np.min(x[neg] / (x[neg] - s[neg]))
            x = x + alpha * (s - x)
            passive &= x > tol
            x[~passive] = 0.0
            if not passive.any():
                s = x
                break
        if not blocked[j]:
            blocked[:] = False
        x = s
        w = A.T @ (b - A @ x)
    else:
        raise NoConvergence("NNLS iteration budget exhausted", best=x, residual=float(np.linalg.norm(A @ x - b)))
    return x, float(np.linalg.norm(A @ x - b))


def min_norm_nonneg(M, r):
    """Least-norm ``x >= 0`` with ``M x = r``, or ``None`` if none is found.

    The least-distance program ``min |x|`` subject to ``M x >= r``,
    ``-M x >= -r`` and ``x >= 0`` is solved through its NNLS dual (Lawson and
    Hanson, ch. 23).  The support of that solution is then polished with a
    minimum-norm least-squares solve, which is exact on the true support.
    """
    M = np.asarray(M, dtype=float)
    r = np.asarray(r, dtype=float)
    p, s = M.shape
    G = np.vstack([M, -M, np.eye(s)])
    h = np.concatenate([r, -r, np.zeros(s)])
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(s + 1)
    f[-1] = 1.0
    try:
        u, _ = nnls(E, f, maxiter=10 * E.shape[1])
    except NoConvergence:
        return None
    res = E @ u - f
    if abs(res[-1]) < 1e-14:
        return None
    x = np.clip(-res[:s] / res[-1], 0.0, None)
    support = x > 1e-9 * max(x.max(), 1e-300)
    if not support.any():
        return None
    polished = np.linalg.lstsq(M[:, support], r, rcond=None)[0]
    if np.all(polished > 0):
        x = np.zeros(s)
        x[support] = polished
    return x
