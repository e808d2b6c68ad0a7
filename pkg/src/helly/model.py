"""Halfspace and strip families: data types, JSON I/O, normalization, generators."""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import lp
from .errors import SchemaError, Unbounded

GENERATOR_KINDS = ("cube", "cross", "simplex", "random")


@dataclass(frozen=True)
class Halfspace:
    """The set ``{x : <a, x> <= b}`` (or the strip ``|<a, x>| <= b``)."""

    a: tuple[float, ...]
    b: float

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = float(self.b)
        if not all(math.isfinite(v) for v in a) or not math.isfinite(b):
            raise ValueError("halfspace has a non-finite coefficient")
        if not any(a):
            raise ValueError("halfspace normal is zero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class HalfspaceFamily:
    dim: int
    symmetric: bool
    members: tuple[Halfspace, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise SchemaError("dim must be a positive integer")
        members = tuple(self.members)
        for i, h in enumerate(members):
            if len(h.a) != self.dim:
                raise SchemaError(f"halfspace {i} has {len(h.a)} coefficients, expected {self.dim}")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_arrays(cls, A, b, symmetric=False) -> HalfspaceFamily:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.broadcast_to(np.asarray(b, dtype=float), (A.shape[0],))
        members = tuple(Halfspace(tuple(row), bi) for row, bi in zip(A.tolist(), b.tolist()))
        return cls(A.shape[1], bool(symmetric), members)

    def __len__(self):
        return len(self.members)

    @property
    def normals(self) -> np.ndarray:
        return np.array([h.a for h in self.members], dtype=float).reshape(len(self.members), self.dim)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([h.b for h in self.members], dtype=float)

    def expanded(self):
        """Rows ``(A, b, member, sign)`` with each strip split into two halfspaces."""
        A, b = self.normals, self.offsets
        m = len(self.members)
        if not self.symmetric:
            return A, b, np.arange(m), np.ones(m)
        A2 = np.empty((2 * m, self.dim))
        A2[0::2] = A
        A2[1::2] = -A
        return A2, np.repeat(b, 2), np.repeat(np.arange(m), 2), np.tile([1.0, -1.0], m)

    def subfamily(self, indices: Sequence[int]) -> HalfspaceFamily:
        return HalfspaceFamily(self.dim, self.symmetric, tuple(self.members[i] for i in indices))


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``x -> matrix @ x + translation``."""

    matrix: np.ndarray
    translation: np.ndarray

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n), np.zeros(n))

    def __call__(self, x):
        return np.asarray(x) @ self.matrix.T + self.translation

    def inverse(self) -> AffineMap:
        inv = np.linalg.inv(self.matrix)
        return AffineMap(inv, -inv @ self.translation)

    def then(self, other: AffineMap) -> AffineMap:
        """Composition ``other(self(x))``."""
        return AffineMap(other.matrix @ self.matrix, other.matrix @ self.translation + other.translation)


@dataclass(frozen=True, eq=False)
class Polytope:
    """Bounded polytope with an interior point.

    ``A`` and ``b`` are the expanded halfspace rows; ``member[i]`` is the
    family index row ``i`` came from.
    """

    family: HalfspaceFamily
    A: np.ndarray
    b: np.ndarray
    member: np.ndarray
    sign: np.ndarray
    center: np.ndarray
    radius: float

    @classmethod
    def from_family(cls, family: HalfspaceFamily, center=None, radius=None, check_bounded=True) -> Polytope:
        """Validate ``family`` and cache an interior point.

        ``center``/``radius`` skip the Chebyshev LP when the caller already
        knows an inscribed ball (e.g. the unit ball in John's position).
        """
        A, b, member, sign = family.expanded()
        if center is None:
            center, radius = lp.chebyshev_center(A, b)
        P = cls(family, A, b, member, sign, np.asarray(center, dtype=float), float(radius))
        if check_bounded:
            P.bbox
        return P

    @cached_property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return lp.bounding_box(self.A, self.b)

    @property
    def dim(self):
        return self.family.dim

    def contains(self, x, tol=0.0):
        x = np.atleast_2d(x)
        return np.all(x @ self.A.T <= self.b + tol, axis=1)


def as_polytope(P) -> Polytope:
    return P if isinstance(P, Polytope) else Polytope.from_family(P)


# --------------------------------------------------------------------- JSON

def family_to_dict(f: HalfspaceFamily) -> dict:
    return {
        "dim": f.dim,
        "symmetric": f.symmetric,
        "halfspaces": [{"a": list(h.a), "b": h.b} for h in f.members],
    }


def serialize_family(f: HalfspaceFamily) -> str:
    return json.dumps(family_to_dict(f)) + "\n"


def family_from_dict(obj) -> HalfspaceFamily:
    if not isinstance(obj, dict):
        raise SchemaError("instance must be a JSON object")
    for key in ("dim", "symmetric", "halfspaces"):
        if key not in obj:
            raise SchemaError(f"missing field {key!r}")
    dim, symmetric, rows = obj["dim"], obj["symmetric"], obj["halfspaces"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise SchemaError("'dim' must be a positive integer")
    if not isinstance(symmetric, bool):
        raise SchemaError("'symmetric' must be a boolean")
    if not isinstance(rows, list):
        raise SchemaError("'halfspaces' must be a list")
    members = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict) or "a" not in row or "b" not in row:
            raise SchemaError(f"halfspace {i} needs fields 'a' and 'b'")
        a, b = row["a"], row["b"]
        if not isinstance(a, list) or not all(_is_number(v) for v in a) or not _is_number(b):
            raise SchemaError(f"halfspace {i} has non-numeric coefficients")
        if len(a) != dim:
            raise SchemaError(f"halfspace {i} has {len(a)} coefficients, expected {dim}")
        members.append(Halfspace(tuple(a), b))
    return HalfspaceFamily(dim, symmetric, tuple(members))


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def parse_family(text) -> HalfspaceFamily:
    """Parse an instance from a string or a text stream."""
    if hasattr(text, "read"):
        text = text.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return family_from_dict(obj)


def family_digest(f: HalfspaceFamily) -> str:
    return hashlib.sha256(serialize_family(f).encode("utf-8")).hexdigest()


# ------------------------------------------------------------ normalization

def transform_family(f: HalfspaceFamily, amap: AffineMap) -> HalfspaceFamily:
    """Family describing ``amap(P)``; member order is preserved."""
    M, t = np.asarray(amap.matrix, float), np.asarray(amap.translation, float)
    if f.symmetric and np.any(t != 0):
        raise ValueError("a translated strip family is no longer symmetric")
    A = np.linalg.solve(M.T, f.normals.T).T
    b = f.offsets + A @ t
    return HalfspaceFamily.from_arrays(A, b, f.symmetric)


def normalize_family(f: HalfspaceFamily) -> tuple[HalfspaceFamily, AffineMap]:
    """Rewrite every constraint as ``<a_i, x> <= 1`` around an interior point.

    The origin is kept when it already sits reasonably deep inside ``P``
    (depth at least a quarter of the Chebyshev radius); otherwise ``P`` is
    translated so its Chebyshev center becomes the origin.
    """
    A, b, _, _ = f.expanded()
    center, radius = lp.chebyshev_center(A, b)
    lp.bounding_box(A, b)
    depth = float(np.min(b / np.linalg.norm(A, axis=1)))
    n = f.dim
    if f.symmetric or depth >= 0.25 * radius:
        amap = AffineMap.identity(n)
    else:
        amap = AffineMap(np.eye(n), -center)
    g = transform_family(f, amap)
    normals = g.normals / g.offsets[:, None]
    return HalfspaceFamily.from_arrays(normals, 1.0, f.symmetric), amap


# --------------------------------------------------------------- generators

def regular_simplex_normals(n):
    """``n + 1`` unit vectors in R^n with pairwise inner product ``-1/n``."""
    E = np.eye(n + 1) - 1.0 / (n + 1)
    # orthonormal basis of the sum-zero hyperplane
    Q, _ = np.linalg.qr(E[:, :n])
    V = E @ Q
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def _random_directions(rng, m, n):
    X = rng.standard_normal((m, n))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


def generate_instance(kind, n, m=None, seed=0, symmetric=False, retries=100) -> HalfspaceFamily:
    """Build a test instance.

    ``cube``, ``cross`` and ``simplex`` ignore ``m`` and ``seed``.  ``random``
    draws ``m`` seeded uniform directions and places each constraint tangent to
    the unit ball, redrawing until the intersection is bounded.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if kind == "cube":
        if symmetric:
            return HalfspaceFamily.from_arrays(np.eye(n), 1.0, True)
        A = np.zeros((2 * n, n))
        for i in range(n):
            A[2 * i, i] = 1.0
            A[2 * i + 1, i] = -1.0
        return HalfspaceFamily.from_arrays(A, 1.0)
    if kind == "cross":
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
        if symmetric:
            signs = signs[signs[:, 0] > 0]
        return HalfspaceFamily.from_arrays(signs / math.sqrt(n), 1.0, symmetric)
    if kind == "simplex":
        if symmetric:
            raise ValueError("the simplex has no strip representation")
        return HalfspaceFamily.from_arrays(regular_simplex_normals(n), 1.0)
    if kind == "random":
        if m is None:
            raise ValueError("random instances need m")
        if m < (n if symmetric else n + 1):
            raise ValueError("too few halfspaces to bound a polytope")
        rng = make_rng(seed)
        for _ in range(retries):
            U = _random_directions(rng, m, n)
            f = HalfspaceFamily.from_arrays(U, 1.0, symmetric)
            A, b, _, _ = f.expanded()
            if lp.is_bounded(A, b):
                return f
        raise Unbounded(f"no bounded draw of {m} halfspaces in R^{n} after {retries} tries")
    raise ValueError(f"unknown instance kind {kind!r}")
