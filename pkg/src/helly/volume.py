"""Volumes of bounded H-polytopes: exact at small dimension, Monte Carlo otherwise."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import BudgetExceeded
from .model import as_polytope

log = logging.getLogger(__name__)

FEAS_TOL = 1e-8
DEDUP_TOL = 1e-7
TIGHT_TOL = 1e-7
MAX_DIM = 6
MAX_SUBSETS = 1_000_000
CHUNK = 1 << 16
Z99 = 2.5758293035489004


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    ci99_low: float
    ci99_high: float
    method: str
    samples: int = 0

    def as_dict(self):
        return {
            "estimate": self.value,
            "ci99": [self.ci99_low, self.ci99_high],
            "method": self.method,
            "samples": self.samples,
        }


def ball_volume(n):
    """Volume of the Euclidean unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


# --------------------------------------------------------------- vertices

def _unit_rows(P):
    norms = np.linalg.norm(P.A, axis=1)
    return P.A / norms[:, None], P.b / norms


def enumerate_vertices(P, max_subsets=MAX_SUBSETS):
    """All vertices of a bounded polytope by brute force over ``n``-subsets of rows.

    Raises
    ------
    BudgetExceeded
        ``n > 6`` or more than ``max_subsets`` subsets to try.
    Unbounded
        The polytope is unbounded.
    """
    return _vertex_data(as_polytope(P), max_subsets)[0]


def _vertex_data(P, max_subsets=MAX_SUBSETS):
    """Vertices and, for each row, the set of vertex indices lying on it."""
    n = P.dim
    A, b = _unit_rows(P)
    m = len(A)
    total = math.comb(m, n)
    if n > MAX_DIM or total > max_subsets:
        raise BudgetExceeded(f"{total} subsets of {m} rows in dimension {n} exceed the budget")
    P.bbox  # raises Unbounded
    found = []
    it = combinations(range(m), n)
    while True:
        block = np.array(list(_take(it, 50_000)), dtype=int).reshape(-1, n)
        if len(block) == 0:
            break
        M = A[block]
        dets = np.linalg.det(M)
        ok = np.abs(dets) > 1e-10
        if not ok.any():
            continue
        X = np.linalg.solve(M[ok], b[block[ok]][..., None])[..., 0]
        feasible = np.all(X @ A.T <= b + FEAS_TOL, axis=1)
        found.append(X[feasible])
    V = _dedup(np.vstack(found) if found else np.empty((0, n)))
    incidence = np.abs(V @ A.T - b) <= TIGHT_TOL  # (vertices, rows)
    return V, incidence


def _take(it, k):
    for _ in range(k):
        try:
            yield next(it)
        except StopIteration:
            return


def _dedup(X):
    if len(X) == 0:
        return X
    X = X[np.lexsort(X.T[::-1])]
    kept = [X[0]]
    for x in X[1:]:
        if not np.any(np.max(np.abs(np.asarray(kept) - x), axis=1) <= DEDUP_TOL):
            kept.append(x)
    return np.array(kept)


# ------------------------------------------------------------ exact volume

def _affine_rank(X):
    if len(X) <= 1:
        return 0
    D = X[1:] - X[0]
    sv = np.linalg.svd(D, compute_uv=False)
    return int(np.sum(sv > 1e-9 * max(1.0, sv[0])))


def _face_volume(V, incidence, S, k, memo):
    """``k``-volume of the face with vertex set ``S`` by pyramids over its facets."""
    if k == 0:
        return 1.0
    key = S
    if key in memo:
        return memo[key]
    idx = np.fromiter(S, dtype=int)
    X = V[idx]
    if k == 1:
        D = X - X[0]
        vol = float(np.max(np.linalg.norm(D, axis=1)))
        memo[key] = vol
        return vol
    apex = X.mean(axis=0)
    sub = incidence[idx]  # rows tight at each vertex of S
    seen = set()
    vol = 0.0
    for r in range(sub.shape[1]):
        T = frozenset(idx[sub[:, r]].tolist())
        if len(T) < k or T == S or T in seen:
            continue
        seen.add(T)
        Y = V[np.fromiter(T, dtype=int)]
        if _affine_rank(Y) != k - 1:
            continue
        # distance from the apex to aff(T), measured inside aff(S)
        base = Y[0]
        D = Y[1:] - base
        Q = np.linalg.svd(D.T, full_matrices=False)[0][:, : k - 1]
        off = apex - base
        h = float(np.linalg.norm(off - Q @ (Q.T @ off)))
        vol += h * _face_volume(V, incidence, T, k - 1, memo) / k
    memo[key] = vol
    return vol


def volume_exact(P, max_subsets=MAX_SUBSETS) -> VolumeEstimate:
    """Exact volume via recursive pyramid decomposition over the face lattice."""
    P = as_polytope(P)
    V, incidence = _vertex_data(P, max_subsets)
    n = P.dim
    if _affine_rank(V) < n:
        return VolumeEstimate(0.0, 0.0, 0.0, "exact")
    vol = _face_volume(V, incidence, frozenset(range(len(V))), n, {})
    return VolumeEstimate(vol, vol, vol, "exact")


# ------------------------------------------------------------- Monte Carlo

def _chunk_rng(seed, chunk):
    # chunk index in the high counter word keeps every chunk's stream disjoint
    bits = np.random.Philox(key=int(seed) & (2**64 - 1), counter=[0, 0, 0, chunk])
    return np.random.Generator(bits)


def _count_chunk(seed, chunk, size, lo, hi, bodies):
    rng = _chunk_rng(seed, chunk)
    X = lo + (hi - lo) * rng.random((size, len(lo)))
    return [int(np.sum(np.all(X @ A.T <= b, axis=1))) for A, b in bodies]


def _sample_counts(seed, samples, lo, hi, bodies, workers):
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    jobs = [(seed, i, s, lo, hi, bodies) for i, s in enumerate(sizes)]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: _count_chunk(*j), jobs))
    else:
        parts = [_count_chunk(*j) for j in jobs]
    return [int(c) for c in np.sum(parts, axis=0)]


def _proportion_ci(hits, total):
    p = hits / total
    half = Z99 * math.sqrt(p * (1 - p) / total)
    return p, max(p - half, 0.0), min(p + half, 1.0)


def volume_mc(P, samples=1_000_000, seed=0, workers=1) -> VolumeEstimate:
    """Hit-or-miss estimate inside the LP bounding box.

    Samples are drawn in fixed-size chunks, each from its own Philox counter
    range, so the estimate depends on ``seed`` only and not on ``workers``.
    """
    P = as_polytope(P)
    lo, hi = P.bbox
    box = float(np.prod(hi - lo))
    (hits,) = _sample_counts(seed, samples, lo, hi, [(P.A, P.b)], workers)
    p, p_lo, p_hi = _proportion_ci(hits, samples)
    return VolumeEstimate(box * p, box * p_lo, box * p_hi, "mc", samples)


def volume_ratio(P, Q, samples=1_000_000, seed=0, exact=None, workers=1, max_subsets=MAX_SUBSETS) -> VolumeEstimate:
    """Estimate ``|Q| / |P|`` for bodies ``P`` inside ``Q``.

    ``exact=None`` uses exact volumes when vertex enumeration fits the budget
    and Monte Carlo otherwise; ``True``/``False`` force one method.  The
    Monte Carlo route samples ``Q``'s bounding box and inverts the fraction of
    ``Q``-hits that also land in ``P``.
    """
    P, Q = as_polytope(P), as_polytope(Q)
    if exact is not False:
        try:
            vp = volume_exact(P, max_subsets).value
            vq = volume_exact(Q, max_subsets).value
        except BudgetExceeded:
            if exact:
                raise
        else:
            r = vq / vp
            return VolumeEstimate(r, r, r, "exact")
    lo, hi = Q.bbox
    hits_p, hits_q = _sample_counts(seed, samples, lo, hi, [(P.A, P.b), (Q.A, Q.b)], workers)
    if hits_q == 0:
        return VolumeEstimate(math.inf, 0.0, math.inf, "mc", samples)
    # P is inside Q, so every P-hit is also a Q-hit
    p, p_lo, p_hi = _proportion_ci(hits_p, hits_q)
    value = 1 / p if p > 0 else math.inf
    low = 1 / p_hi if p_hi > 0 else math.inf
    high = 1 / p_lo if p_lo > 0 else math.inf
    return VolumeEstimate(value, low, high, "mc", samples)
