"""Selecting few halfspaces (or strips) whose intersection is not much larger than P.

Three pipelines, each starting from John's position:

* ``symmetric``  strips; sparsify the John decomposition and keep the strips
  behind the surviving contact points.
* ``lifted``     halfspaces; lift the decomposition to R^{n+1}, sparsify there,
  then add a Caratheodory set of contacts around a small correction vector.
* ``naszodi``    halfspaces; ``n`` Dvoretzky-Rogers contacts plus at most ``n``
  contacts on the face of ``conv{u_j}`` hit by a ray through their centroid.

Every pipeline comes with a closed-form bound on the volume ratio between the
selected intersection and ``P``, returned in log space.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .blieb import kappa_weights
from .errors import InternalCheckFailed, InvalidDecomposition, NotInHull, OriginNotInterior
from .john import JohnForm, john_decomposition, to_john_position
from .linalg import rank_one_sum
from .model import as_polytope
from .nnls import min_norm_nonneg
from .sparsify import bss_select, gamma_d, lift_decomposition, step_budget

log = logging.getLogger(__name__)

ALGORITHMS = ("symmetric", "lifted", "naszodi")
DR_TOL = 1e-9
KAPPA_SUM_TOL = 1e-9
HULL_TOL = 1e-8
DEGENERATE_CENTROID = 1e-12


# ------------------------------------------------------------ closed forms

def log_gamma_half(k):
    """``log Gamma(k / 2)`` for a positive integer ``k``, by exact recursion."""
    if k < 1:
        raise ValueError("argument must be a positive half-integer")
    x = 1.0 if k % 2 == 0 else 0.5
    acc = 0.0 if k % 2 == 0 else 0.5 * math.log(math.pi)
    while x < k / 2:
        acc += math.log(x)
        x += 1.0
    return acc


def log_factorial(n):
    return math.fsum(math.log(k) for k in range(2, n + 1))


def certified_bound(algorithm, n, d=None):
    """Natural log of the guaranteed volume-ratio bound.

    ``d`` is ignored by ``naszodi`` and required by the other two algorithms.
    """
    if n < 1:
        raise ValueError("n must be positive")
    lg = log_gamma_half(n + 2)  # log Gamma(n/2 + 1)
    if algorithm == "naszodi":
        return (
            0.5 * n * math.log(math.pi)
            + n * math.log(2)
            + n * math.log(n + 1)
            + 0.5 * n * math.log(n)
            + 0.5 * log_factorial(n)
            - lg
        )
    if d is None or not d > 1:
        raise ValueError(f"{algorithm} needs d > 1")
    sd = math.sqrt(d)
    if algorithm == "symmetric":
        return n * math.log(2 / math.sqrt(math.pi) * (sd + 1) / (sd - 1)) + lg
    if algorithm == "lifted":
        return (
            0.5 * (n + 1) * math.log(gamma_d(d))
            + 0.5 * n * math.log(n)
            + 1.5 * (n + 1) * math.log(n + 1)
            - 0.5 * n * math.log(math.pi)
            - log_factorial(n)
            + lg
        )
    raise ValueError(f"unknown algorithm {algorithm!r}")


def strip_volume_lower_bound(n, d):
    """Log of the classical lower bound on ``|P|`` for ``floor(d n)`` strips of width at most 2.

    Reported next to the symmetric bound for comparison: any such ``P``
    has ``|P|^{1/n} >= 2 / sqrt(e log(1 + d))``.
    """
    return n * (math.log(2) - 0.5 - 0.5 * math.log(math.log1p(d)))


def selection_cap(algorithm, n, d=None):
    if algorithm == "symmetric":
        return step_budget(d, n)
    if algorithm == "lifted":
        return step_budget(d, n + 1) + n + 1
    if algorithm == "naszodi":
        return 2 * n
    raise ValueError(f"unknown algorithm {algorithm!r}")


# -------------------------------------------------------------- primitives

def dr_select(contacts, weights):
    """Greedy Dvoretzky-Rogers sequence from a John decomposition.

    The first pick is the contact with the largest weight (lowest index on
    ties); each later pick is farthest from the span of the earlier ones.
    Because ``sum c_j |Q u_j|^2 = n - k + 1`` for the projection ``Q`` onto the
    orthogonal complement of ``k - 1`` picks, the ``k``-th distance is at least
    ``sqrt((n - k + 1) / n)``.

    Returns
    -------
    indices : ndarray of int, shape (n,)
    distances : ndarray, shape (n,)
    """
    U = np.atleast_2d(np.asarray(contacts, dtype=float))
    c = np.asarray(weights, dtype=float)
    m, n = U.shape
    res = float(np.linalg.norm(np.eye(n) - rank_one_sum(U, c)))
    if res > 1e-5:
        raise InvalidDecomposition(f"contacts are not a John decomposition (residual {res:.2e})")
    picks = [int(np.argmax(c))]
    dists = [float(np.linalg.norm(U[picks[0]]))]
    R = U.copy()
    for k in range(1, n):
        q = R[picks[-1]] / np.linalg.norm(R[picks[-1]])
        R = R - np.outer(R @ q, q)
        norms = np.linalg.norm(R, axis=1)
        norms[picks] = -1.0
        j = int(np.argmax(norms))
        picks.append(j)
        dists.append(float(norms[j]))
    dists = np.array(dists)
    floor = np.sqrt((n - np.arange(n)) / n) - DR_TOL
    if np.any(dists < floor):
        raise InternalCheckFailed(
            "Dvoretzky-Rogers distance below its guaranteed value",
            {"distances": dists.tolist(), "floor": floor.tolist()},
        )
    return np.array(picks), dists


def _affine_rank(P):
    M = np.vstack([P.T, np.ones(len(P))])
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > 1e-10 * max(sv[0], 1.0)))


def _dependent_prefix(P):
    """Null vector of the shortest affinely dependent prefix of ``P``, or ``None``."""
    for k in range(2, len(P) + 1):
        if _affine_rank(P[:k]) < k:
            M = np.vstack([P[:k].T, np.ones(k)])
            z = np.linalg.svd(M)[2][-1]
            return z if z[-1] > 0 else -z
    return None


def _reduce_support(points, rho, target):
    """Shrink a convex combination to affinely independent support.

    Repeatedly takes the affine dependence among the lowest-indexed support
    points and moves along it until a coefficient vanishes (lowest index on
    ties).  Affine dependences do not change under affine maps, so neither
    does the support this produces.
    """
    idx = np.flatnonzero(rho > 0)
    rho = rho[idx].copy()
    while True:
        z = _dependent_prefix(points[idx])
        if z is None:
            break
        k = len(z)
        pos = np.flatnonzero(z > 1e-12 * np.abs(z).max())
        ratios = rho[pos] / z[pos]
        hit = pos[np.flatnonzero(ratios <= ratios.min() * (1 + 1e-12))[0]]
        rho[:k] -= ratios.min() * z
        rho[hit] = 0.0
        keep = rho > 1e-14 * max(1.0, rho.max())
        idx, rho = idx[keep], rho[keep]
    return idx, _polish(points[idx], rho, target)


def _polish(P, rho, target):
    M = np.vstack([P.T, np.ones(len(P))])
    rhs = np.concatenate([target, [1.0]])
    sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    return sol if np.all(sol > 0) else rho


def _start_weights(target, P):
    """A convex combination of ``P`` equal to ``target``.

    The least-norm combination is preferred because it is unique and does not
    depend on the coordinate system; the LP is the fallback.
    """
    M = np.vstack([P.T, np.ones(len(P))])
    rhs = np.concatenate([target, [1.0]])
    rho = min_norm_nonneg(M, rhs)
    if rho is not None and np.linalg.norm(M @ rho - rhs) <= HULL_TOL:
        return rho
    return lp.convex_weights(target, P)


def caratheodory_reduce(target, points):
    """Write ``target`` as a convex combination of at most ``n + 1`` of ``points``.

    Returns ``(indices, coefficients)`` with strictly positive coefficients.

    Raises
    ------
    NotInHull
        ``target`` is not in ``conv(points)`` to within ``1e-8``.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    target = np.asarray(target, dtype=float)
    rho = _start_weights(target, P)
    if rho is None:
        raise NotInHull("target lies outside the convex hull")
    idx, coef = _reduce_support(P, np.clip(rho, 0.0, None), target)
    err = float(np.linalg.norm(coef @ P[idx] - target))
    if err > HULL_TOL or abs(coef.sum() - 1.0) > 1e-9:
        raise NotInHull(f"reconstruction error {err:.2e}")
    return idx, coef


def ray_exit(direction, points):
    """Point where the ray ``{t * direction : t >= 0}`` leaves ``conv(points)``.

    Returns ``(z, indices, coefficients)``; ``z`` lies on a boundary face and
    the convex combination uses at most ``n`` points.

    Raises
    ------
    OriginNotInterior
        The ray leaves the hull at the origin (or never meets it).
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    direction = np.asarray(direction, dtype=float)
    n = P.shape[1]
    t, rho = lp.max_ray(direction, P)
    if t is None or t <= 1e-12:
        raise OriginNotInterior("the origin is not an interior point of the hull")
    z = t * direction
    idx, coef = _reduce_support(P, np.clip(rho, 0.0, None), z)
    if len(idx) > n:
        # n + 1 affinely independent points with z on the boundary: one weight is zero up to rounding
        drop = np.argmin(coef)
        idx = np.delete(idx, drop)
        coef = _polish(P[idx], np.delete(coef, drop), z)
    coef = coef / coef.sum()
    z = coef @ P[idx]
    return z, idx, coef


# ---------------------------------------------------------------- pipelines

@dataclass(frozen=True, eq=False)
class SelectionReport:
    """Outcome of one selection run.

    ``selected`` indexes members of the input family; ``rows`` indexes the
    contact rows of the John image that produced them.
    """

    algorithm: str
    d: float | None
    dim: int
    selected: list
    certified_log_ratio: float
    gamma_achieved: float | None
    kappa: np.ndarray | None
    residuals: dict
    details: dict = field(default_factory=dict)

    @property
    def s(self):
        return len(self.selected)

    @property
    def cap(self):
        return selection_cap(self.algorithm, self.dim, self.d)


def _members(jf: JohnForm, contact_idx):
    """Family members behind the given contact indices, deduplicated."""
    return sorted({int(m) for m in jf.members[np.asarray(contact_idx, dtype=int)]})


def _check_cap(algorithm, n, d, selected, floor=1):
    cap = selection_cap(algorithm, n, d)
    if not floor <= len(selected) <= cap:
        raise InternalCheckFailed(
            f"{algorithm} selected {len(selected)} members, allowed {floor}..{cap}",
            {"selected": selected, "cap": cap},
        )


def _john(P, symmetric):
    image, amap, _ = to_john_position(P)
    return image, john_decomposition(image, symmetric=symmetric, amap=amap)


def select_symmetric(P, d=4.0) -> SelectionReport:
    """Select at most ``ceil(d n)`` strips from a strip family."""
    P = as_polytope(P)
    if not P.family.symmetric:
        raise ValueError("select_symmetric needs a strip family")
    n = P.dim
    _, jf = _john(P, symmetric=True)
    sd = bss_select(jf.contacts, jf.weights, d)
    kw = kappa_weights(jf.contacts[sd.sigma], sd.weights)
    selected = _members(jf, sd.sigma)
    _check_cap("symmetric", n, d, selected, floor=n)
    log.info("symmetric: %d strips of %d, gamma %.4g", len(selected), len(P.family), sd.certificate.gamma_achieved)
    return SelectionReport(
        algorithm="symmetric",
        d=float(d),
        dim=n,
        selected=selected,
        certified_log_ratio=certified_bound("symmetric", n, d),
        gamma_achieved=sd.certificate.gamma_achieved,
        kappa=kw.kappa,
        residuals=jf.residuals(),
        details={
            "contacts": len(jf.rows),
            "sandwich": sd.certificate.as_dict(),
            "strip_lower_bound_log": strip_volume_lower_bound(n, d),
        },
    )


def select_halfspaces_lifted(P, d=4.0) -> SelectionReport:
    """Select at most ``ceil(d (n+1)) + n + 1`` halfspaces through the lifted decomposition."""
    P = as_polytope(P)
    n = P.dim
    _, jf = _john(P, symmetric=False)
    u, c = jf.contacts, jf.weights
    v, b = lift_decomposition(u, c)
    sd = bss_select(v, b, d)
    kw = kappa_weights(v[sd.sigma], sd.weights)
    kappa_sum = float(kw.kappa.sum())
    if abs(kappa_sum - (n + 1)) > KAPPA_SUM_TOL:
        raise InternalCheckFailed("lifted kappa weights do not sum to n + 1", {"kappa_sum": kappa_sum})
    w = -(kw.kappa @ u[sd.sigma]) / (n * (n + 1))
    w_norm = float(np.linalg.norm(w))
    if w_norm > 1.0 / n + 1e-9:
        raise InternalCheckFailed("correction vector is longer than 1/n", {"w_norm": w_norm})
    tau, rho = caratheodory_reduce(w, u)
    selected = _members(jf, np.union1d(sd.sigma, tau))
    _check_cap("lifted", n, d, selected)
    log.info("lifted: %d of %d, sigma %d, tau %d", len(selected), len(P.family), sd.size, len(tau))
    return SelectionReport(
        algorithm="lifted",
        d=float(d),
        dim=n,
        selected=selected,
        certified_log_ratio=certified_bound("lifted", n, d),
        gamma_achieved=sd.certificate.gamma_achieved,
        kappa=kw.kappa,
        residuals=jf.residuals(),
        details={
            "contacts": len(jf.rows),
            "sigma_size": int(sd.size),
            "tau_size": int(len(tau)),
            "kappa_sum": kappa_sum,
            "w_norm": w_norm,
            "sandwich": sd.certificate.as_dict(),
        },
    )


def select_naszodi(P) -> SelectionReport:
    """Select at most ``2n`` halfspaces: Dvoretzky-Rogers contacts plus a ray-exit face."""
    P = as_polytope(P)
    n = P.dim
    _, jf = _john(P, symmetric=False)
    u = jf.contacts
    picks, dists = dr_select(u, jf.weights)
    w = u[picks].sum(axis=0) / (n + 1)
    w_norm = float(np.linalg.norm(w))
    direction = -u[picks[0]] if w_norm < DEGENERATE_CENTROID else -w / w_norm
    z, ray_idx, rho = ray_exit(direction, u)
    z_norm = float(np.linalg.norm(z))
    if z_norm < 1.0 / n - HULL_TOL:
        raise InternalCheckFailed("ray left conv{u_j} inside the ball of radius 1/n", {"z_norm": z_norm})
    selected = _members(jf, np.union1d(picks, ray_idx))
    _check_cap("naszodi", n, None, selected)
    log.info("naszodi: %d of %d", len(selected), len(P.family))
    return SelectionReport(
        algorithm="naszodi",
        d=None,
        dim=n,
        selected=selected,
        certified_log_ratio=certified_bound("naszodi", n),
        gamma_achieved=None,
        kappa=None,
        residuals=jf.residuals(),
        details={
            "contacts": len(jf.rows),
            "dr_distances": dists.tolist(),
            "centroid_norm": w_norm,
            "exit_norm": z_norm,
            "ray_support": int(len(ray_idx)),
        },
    )


def run_selection(algorithm, P, d=4.0) -> SelectionReport:
    if algorithm == "symmetric":
        return select_symmetric(P, d)
    if algorithm == "lifted":
        return select_halfspaces_lifted(P, d)
    if algorithm == "naszodi":
        return select_naszodi(P)
    raise ValueError(f"unknown algorithm {algorithm!r}")
