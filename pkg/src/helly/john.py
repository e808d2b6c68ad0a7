"""Maximum-volume inscribed ellipsoid, John's position and John's decomposition.

The inscribed ellipsoid ``{B y + c : |y| <= 1}`` of ``{A x <= b}`` solves

    maximize log det B   subject to   |B a_i| <= b_i - <a_i, c>,

a convex program with one second-order cone constraint per row.  It is
solved by a primal barrier method: for increasing ``t`` we minimize

    -t log det B - sum_i log((b_i - <a_i, c>)^2 - |B a_i|^2)

with damped Newton steps.  Each cone barrier has parameter 2, so the centered
point for ``t`` is ``2m/t``-suboptimal in log-determinant.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContactDeficit, NoConvergence, ResidualTooLarge, Unbounded
from .linalg import rank_one_sum
from .model import AffineMap, HalfspaceFamily, Polytope, as_polytope
from .nnls import min_norm_nonneg, nnls

log = logging.getLogger(__name__)

CONTACT_TOL = 1e-6
WEIGHT_FLOOR = 1e-10
RESIDUAL_TOL = 1e-5
DUPLICATE_TOL = 1e-8
GROWTH = 20.0
# slacks near 1e-10 carry ~1e-6 relative rounding, which floors the decrement
CENTERING_TOL = 1e-5


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{shape @ y + center : |y|_2 <= 1}``."""

    center: np.ndarray
    shape: np.ndarray
    kkt_residual: float = 0.0
    iterations: int = 0

    @property
    def log_det(self):
        return float(np.linalg.slogdet(self.shape)[1])

    def volume(self):
        n = len(self.center)
        return math.exp(self.log_det) * math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _sym_basis(n):
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
    return np.array(basis)


class _Barrier:
    def __init__(self, A, b, centered):
        self.A = A
        self.b = b
        self.m, self.n = A.shape
        self.centered = centered
        self.E = _sym_basis(self.n)
        self.p = len(self.E)
        # G[i] maps the packed shape coordinates x to B a_i
        self.G = np.einsum("knl,il->ink", self.E, A)
        self.GtG = np.einsum("ink,inl->ikl", self.G, self.G)
        self.tri = np.triu_indices(self.n)

    def unpack(self, z):
        B = np.einsum("k,kij->ij", z[: self.p], self.E)
        c = np.zeros(self.n) if self.centered else z[self.p:]
        return B, c

    def pack(self, B, c):
        x = B[self.tri]
        return x if self.centered else np.concatenate([x, c])

    def slacks(self, z):
        B, c = self.unpack(z)
        beta = self.b - self.A @ c
        r2 = np.sum((self.A @ B) ** 2, axis=1)
        return beta, beta * beta - r2

    def feasible(self, z):
        B, _ = self.unpack(z)
        try:
            np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            return False
        beta, q = self.slacks(z)
        return bool(np.all(beta > 0) and np.all(q > 0))

    def newton(self, z, t):
        """Gradient and Hessian of the barrier objective at ``z``."""
        p, n = self.p, self.n
        B, _ = self.unpack(z)
        x = z[:p]
        Binv = np.linalg.inv(B)
        M = np.einsum("ij,kjl->kil", Binv, self.E)
        g_logdet = -np.einsum("kii->k", M)
        H_logdet = np.einsum("kij,lji->kl", M, M)

        beta, q = self.slacks(z)
        Gx = np.einsum("ikl,l->ik", self.GtG, x)  # G_i^T B a_i
        dim = p if self.centered else p + n
        dq = np.empty((self.m, dim))
        dq[:, :p] = -2.0 * Gx
        if not self.centered:
            dq[:, p:] = -2.0 * beta[:, None] * self.A
        inv_q = 1.0 / q
        grad = -(dq * inv_q[:, None]).sum(axis=0)
        H = (dq * (inv_q**2)[:, None]).T @ dq
        # -hess(q_i)/q_i: +2 GtG_i / q_i on the shape block, -2 a_i a_i^T / q_i on the center block
        H[:p, :p] += 2.0 * np.einsum("i,ikl->kl", inv_q, self.GtG)
        if not self.centered:
            H[p:, p:] -= 2.0 * (self.A * inv_q[:, None]).T @ self.A
        grad[:p] += t * g_logdet
        H[:p, :p] += t * H_logdet
        return grad, 0.5 * (H + H.T)


def compute_mvee(P, centered=None, gap_tol=1e-8, max_newton=400):
    """Maximum-volume ellipsoid inscribed in a bounded polytope.

    Parameters
    ----------
    P : Polytope or HalfspaceFamily
    centered : bool, optional
        Fix the center at the origin.  Defaults to ``True`` for strip
        families, whose John ellipsoid is always centered.
    gap_tol : float
        Stop once the certified log-determinant gap ``2m/t`` drops below this.

    Returns
    -------
    Ellipsoid
        ``kkt_residual`` is the remaining certified gap plus the last Newton
        decrement.
    """
    P = as_polytope(P)
    if centered is None:
        centered = P.family.symmetric
    norms = np.linalg.norm(P.A, axis=1)
    A = P.A / norms[:, None]
    b = P.b / norms
    bar = _Barrier(A, b, centered)
    c0 = np.zeros(P.dim) if centered else P.center
    depth = float(np.min(b - A @ c0))
    if depth <= 0:
        raise Unbounded("origin is not interior for a centered ellipsoid")
    z = bar.pack(0.5 * depth * np.eye(P.dim), c0)

    t = 1.0
    newton_steps = 0
    while True:
        recent = []
        while True:
            grad, H = bar.newton(z, t)
            try:
                step = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(H, grad, rcond=None)[0]
            decrement = float(np.sqrt(max(-grad @ step, 0.0)))
            newton_steps += 1
            recent.append(decrement)
            stalled = len(recent) > 6 and decrement < 1e-3 and min(recent[-6:-1]) <= 2 * decrement
            if decrement < CENTERING_TOL or stalled:
                if bar.feasible(z + step):
                    z = z + step
                break
            if newton_steps > max_newton:
                B, c = bar.unpack(z)
                raise NoConvergence("MVEE Newton budget exhausted", best=Ellipsoid(c, B), residual=decrement)
            alpha = 1.0 if decrement < 0.25 else 1.0 / (1.0 + decrement)
            while not bar.feasible(z + alpha * step) and alpha > 1e-14:
                alpha *= 0.5
            z = z + alpha * step
        gap = 2.0 * bar.m / t
        if gap < gap_tol:
            break
        t *= GROWTH
    B, c = bar.unpack(z)
    log.debug("mvee: n=%d m=%d newton=%d gap=%.2e", P.dim, bar.m, newton_steps, gap)
    return Ellipsoid(c, 0.5 * (B + B.T), kkt_residual=gap + decrement**2, iterations=newton_steps)


def to_john_position(P):
    """Map ``P`` so that its maximum-volume inscribed ellipsoid is the unit ball.

    Returns ``(image, amap, ellipsoid)`` where ``amap(x) = B^{-1}(x - center)``
    and every row of ``image`` has offset 1.
    """
    P = as_polytope(P)
    ell = compute_mvee(P)
    Binv = np.linalg.inv(ell.shape)
    amap = AffineMap(Binv, -Binv @ ell.center)
    fam = P.family
    beta = fam.offsets - fam.normals @ ell.center
    normals = (fam.normals @ ell.shape) / beta[:, None]
    image = HalfspaceFamily.from_arrays(normals, 1.0, fam.symmetric)
    excess = float(np.max(np.linalg.norm(normals, axis=1))) - 1.0
    if excess > 1e-8:
        raise ResidualTooLarge(f"unit ball leaves the John image by {excess:.2e}", excess)
    # bounded because P is; the unit ball is inscribed
    image_P = Polytope.from_family(image, center=np.zeros(P.dim), radius=1.0 - max(excess, 0.0), check_bounded=False)
    return image_P, amap, ell


@dataclass(frozen=True, eq=False)
class JohnForm:
    """Contact points and weights of a John decomposition.

    ``rows`` index the expanded halfspace rows of the polytope, ``members`` the
    family members they came from.
    """

    map: AffineMap
    contacts: np.ndarray
    rows: np.ndarray
    members: np.ndarray
    weights: np.ndarray
    residual_identity: float
    residual_barycenter: float
    symmetric: bool
    min_slack: float

    @property
    def dim(self):
        return self.contacts.shape[1]

    def residuals(self):
        return {
            "identity": self.residual_identity,
            "barycenter": self.residual_barycenter,
            "weight_sum_error": abs(float(self.weights.sum()) - self.dim),
            "min_slack": self.min_slack,
        }


def _identity_rows(U):
    """Rows of the linear map ``c -> sum c_j u_j u_j^T`` in packed Frobenius coordinates."""
    n = U.shape[1]
    i, j = np.triu_indices(n)
    scale = np.where(i == j, 1.0, math.sqrt(2.0))
    return (U[:, i] * U[:, j] * scale).T, np.where(i == j, 1.0, 0.0)


def john_decomposition(P, symmetric=None, amap=None, tau=CONTACT_TOL):
    """John decomposition of a polytope already in John's position.

    Contacts are the unit normals of rows with ``1 - |a_i| / b_i <= tau``; weights are
    the nonnegative least-squares solution of ``sum c_j u_j u_j^T = I`` (plus
    ``sum c_j u_j = 0`` unless ``symmetric``).
    """
    P = as_polytope(P)
    n = P.dim
    if symmetric is None:
        symmetric = P.family.symmetric
    lengths = np.linalg.norm(P.A, axis=1)
    # distance from the origin to row i is b_i / |a_i|
    slack = 1.0 - lengths / P.b
    candidates = np.flatnonzero(slack <= tau)
    if symmetric:
        candidates = candidates[P.sign[candidates] > 0]
    rows, contacts = [], []
    for i in candidates:
        u = P.A[i] / lengths[i]
        if any(np.linalg.norm(u - v) < DUPLICATE_TOL for v in contacts):
            continue
        rows.append(int(i))
        contacts.append(u)
    need = n if symmetric else n + 1
    if len(rows) < need:
        raise ContactDeficit(f"found {len(rows)} contact points, need at least {need}")
    U = np.array(contacts)
    M, rhs = _identity_rows(U)
    if not symmetric:
        M = np.vstack([M, U.T])
        rhs = np.concatenate([rhs, np.zeros(n)])
    c = min_norm_nonneg(M, rhs)
    if c is None or np.linalg.norm(M @ c - rhs) > RESIDUAL_TOL:
        c, _ = nnls(M, rhs)
    keep = c >= WEIGHT_FLOOR
    U, c, rows = U[keep], c[keep], np.array(rows)[keep]
    res_id = float(np.linalg.norm(np.eye(n) - rank_one_sum(U, c)))
    res_bar = 0.0 if symmetric else float(np.linalg.norm(c @ U))
    if len(rows) < need:
        raise ContactDeficit(f"only {len(rows)} contacts carry weight, need at least {need}")
    if res_id > RESIDUAL_TOL or res_bar > RESIDUAL_TOL:
        raise ResidualTooLarge(
            f"John decomposition residuals identity={res_id:.2e} barycenter={res_bar:.2e}",
            max(res_id, res_bar),
        )
    return JohnForm(
        map=amap if amap is not None else AffineMap.identity(n),
        contacts=U,
        rows=rows,
        members=P.member[rows],
        weights=c,
        residual_identity=res_id,
        residual_barycenter=res_bar,
        symmetric=bool(symmetric),
        min_slack=float(slack.min()),
    )


def john_form(P, symmetric=None):
    """Run ``to_john_position`` then ``john_decomposition``.

    Returns ``(image_polytope, JohnForm)``.
    """
    image, amap, _ = to_john_position(P)
    return image, john_decomposition(image, symmetric=symmetric, amap=amap)
