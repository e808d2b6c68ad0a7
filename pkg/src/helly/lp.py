"""Small dense linear programs used across the package.

All programs go through :func:`scipy.optimize.linprog` with the HiGHS dual
simplex, which returns basic optimal solutions.  That matters for the
Carathéodory-style callers: a basic solution of a program with ``k`` equality
rows has at most ``k`` nonzero variables.
"""
import numpy as np
from scipy.optimize import linprog

from .errors import EmptyInterior, Unbounded

_STATUS_UNBOUNDED = 3
_STATUS_INFEASIBLE = 2


def _solve(c, **kwargs):
    return linprog(c, method="highs-ds", **kwargs)


def chebyshev_center(A, b):
    """Center and radius of the largest Euclidean ball inside ``{A x <= b}``.

    Raises
    ------
    Unbounded
        If arbitrarily large balls fit.
    EmptyInterior
        If the polyhedron has no interior point.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    # variables (x, r); maximize r
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([A, norms[:, None]])
    bounds = [(None, None)] * n + [(0, None)]
    res = _solve(c, A_ub=A_ub, b_ub=b, bounds=bounds)
    if res.status == _STATUS_UNBOUNDED:
        raise Unbounded("inscribed balls of unbounded radius")
    if res.status == _STATUS_INFEASIBLE:
        raise EmptyInterior("constraints are infeasible")
    if res.status != 0:
        raise EmptyInterior(f"Chebyshev LP failed: {res.message}")
    x, r = res.x[:n], res.x[-1]
    scale = max(1.0, float(np.max(np.abs(b) / norms)))
    if r <= 1e-10 * scale:
        raise EmptyInterior(f"Chebyshev radius {r:.3e} is zero")
    return x, float(r)


def bounding_box(A, b):
    """Per-coordinate extent of ``{A x <= b}`` by ``2n`` LPs."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    lo = np.empty(n)
    hi = np.empty(n)
    bounds = [(None, None)] * n
    for k in range(n):
        for sign, out in ((1.0, hi), (-1.0, lo)):
            c = np.zeros(n)
            c[k] = -sign
            res = _solve(c, A_ub=A, b_ub=b, bounds=bounds)
            if res.status == _STATUS_UNBOUNDED:
                raise Unbounded(f"coordinate {k} is unbounded in direction {sign:+.0f}")
            if res.status != 0:
                raise EmptyInterior(f"bounding-box LP failed: {res.message}")
            out[k] = res.x[k]
    return lo, hi


def is_bounded(A, b):
    try:
        bounding_box(A, b)
    except Unbounded:
        return False
    return True


def convex_weights(target, points):
    """Nonnegative weights summing to one that reproduce ``target``.

    Returns ``None`` when ``target`` is outside ``conv(points)``.
    """
    points = np.asarray(points, dtype=float)
    target = np.asarray(target, dtype=float)
    m = points.shape[0]
    A_eq = np.vstack([points.T, np.ones((1, m))])
    b_eq = np.concatenate([target, [1.0]])
    res = _solve(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m)
    if res.status != 0:
        return None
    return res.x


def max_ray(direction, points):
    """Largest ``t`` with ``t * direction`` in ``conv(points)``.

    Returns ``(t, weights)`` where ``weights`` is a basic optimal solution.
    """
    points = np.asarray(points, dtype=float)
    direction = np.asarray(direction, dtype=float)
    m, n = points.shape
    # variables (rho_1..rho_m, t); maximize t
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_eq = np.zeros((n + 1, m + 1))
    A_eq[:n, :m] = points.T
    A_eq[:n, m] = -direction
    A_eq[n, :m] = 1.0
    b_eq = np.zeros(n + 1)
    b_eq[n] = 1.0
    bounds = [(0, None)] * m + [(None, None)]
    res = _solve(c, A_eq=A_eq, b_eq=b_eq, bounds=bounds)
    if res.status != 0:
        return None, None
    return float(res.x[-1]), res.x[:m]
