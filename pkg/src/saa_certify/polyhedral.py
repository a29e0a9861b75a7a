"""Linear programming and polyhedral-cone machinery.

Recourse feasibility ``{y >= 0 : W y = h - T x} != {}`` is decided two ways:
directly by phase-1 simplex, or through Farkas' lemma as
``a^T (h - T x) >= 0`` for every extreme ray ``a`` of the cone
``{a : a^T W >= 0}``. Extreme rays are enumerated with the double
description method.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import (
    CapacityError,
    DimensionError,
    IterationLimitError,
    NotPointedError,
    SchemaError,
)

PIVOT_TOL = 1e-10
PHASE_ONE_TOL = 1e-8
RAY_TOL = 1e-9
RANK_TOL = 1e-10
DEFAULT_RAY_CAP = 100_000


# -- matrices ----------------------------------------------------------------


def as_matrix(W, name="matrix") -> np.ndarray:
    A = np.array(W, dtype=float, ndmin=2, copy=True)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional")
    if not np.all(np.isfinite(A)):
        raise DimensionError(f"{name} has non-finite entries")
    return A


def matrix_to_json(A) -> dict:
    A = np.asarray(A, dtype=float)
    return {"rows": int(A.shape[0]), "cols": int(A.shape[1]), "data": [float(v) for v in A.ravel()]}


def matrix_from_json(doc) -> np.ndarray:
    """Parse ``{"rows": r, "cols": c, "data": [...]}`` (row-major)."""
    if not isinstance(doc, dict):
        raise SchemaError("matrix must be an object with rows, cols, data")
    extra = set(doc) - {"rows", "cols", "data", "schema_version"}
    if extra:
        raise SchemaError(f"unknown matrix fields: {sorted(extra)}")
    if doc.get("schema_version", 1) != 1:
        raise SchemaError("unsupported schema_version")
    try:
        rows, cols, data = int(doc["rows"]), int(doc["cols"]), doc["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed matrix: {exc}") from None
    if rows < 1 or cols < 1 or len(data) != rows * cols:
        raise SchemaError(f"matrix data has {len(data)} entries, expected {rows}x{cols}")
    return as_matrix(np.asarray(data, dtype=float).reshape(rows, cols))


def matrix_key(A) -> str:
    """Exact content hash, used to cache per-matrix ray sets."""
    A = np.ascontiguousarray(A, dtype=float)
    h = hashlib.sha256(repr(A.shape).encode())
    h.update(A.tobytes())
    return h.hexdigest()


# -- simplex -----------------------------------------------------------------


@dataclass(frozen=True)
class LpOutcome:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0


def _standardize(A_eq, b):
    A = as_matrix(A_eq, "A_eq")
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.shape[0] != b.shape[0]:
        raise DimensionError(f"A_eq has {A.shape[0]} rows but b has {b.shape[0]} entries")
    scale = np.abs(A).max(axis=1) if A.shape[1] else np.ones(A.shape[0])
    scale[scale == 0.0] = 1.0
    A /= scale[:, None]
    b = b / scale
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    return A, b


def _phase_one(A, b, budget):
    """Phase-1 tableau. Returns (T, basis, infeasibility, iterations)."""
    m, n = A.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = np.arange(n, n + m, dtype=np.int64)
    # artificial columns never re-enter
    status, it, _ = kernels.simplex_iterate(T, basis, n, budget, PIVOT_TOL)
    if status == kernels.ITERATION_LIMIT:
        raise IterationLimitError(f"phase 1 hit the iteration cap ({budget})")
    return T, basis, max(-T[m, -1], 0.0), it


def _remove_artificials(T, basis, n):
    m = len(basis)
    keep = []
    for i in range(m):
        if basis[i] >= n:
            cols = np.flatnonzero(np.abs(T[i, :n]) > 1e-9)
            if cols.size == 0:
                continue  # redundant equality
            kernels.pivot(T, i, int(cols[0]))
            basis[i] = cols[0]
        keep.append(i)
    rows = keep + [m]
    T2 = np.ascontiguousarray(np.hstack([T[rows, :n], T[rows, -1:]]))
    return T2, np.ascontiguousarray(basis[keep])


def lp_solve(c, A_eq, b) -> LpOutcome:
    """min c^T z  s.t.  A_eq z = b, z >= 0, by two-phase simplex with Bland's rule."""
    c = np.asarray(c, dtype=float).reshape(-1)
    A, bs = _standardize(A_eq, b)
    m, n = A.shape
    if c.shape[0] != n:
        raise DimensionError(f"c has {c.shape[0]} entries but A_eq has {n} columns")
    cap = 50 * (m + n)
    T, basis, infeas, it1 = _phase_one(A, bs, cap)
    if infeas > PHASE_ONE_TOL:
        return LpOutcome("infeasible", iterations=it1)
    T, basis = _remove_artificials(T, basis, n)
    k = len(basis)
    T[k, :n] = c - c[basis] @ T[:k, :n]
    T[k, -1] = -(c[basis] @ T[:k, -1])
    status, it2, _ = kernels.simplex_iterate(T, basis, n, cap - it1, PIVOT_TOL)
    if status == kernels.ITERATION_LIMIT:
        raise IterationLimitError(f"simplex hit the iteration cap ({cap})")
    if status == kernels.UNBOUNDED:
        return LpOutcome("unbounded", iterations=it1 + it2)
    x = np.zeros(n)
    x[basis] = T[:k, -1]
    np.maximum(x, 0.0, out=x)
    return LpOutcome("optimal", x=x, objective=float(c @ x), iterations=it1 + it2)


def lp_feasible_nonneg(W, rhs) -> bool:
    """True iff {y >= 0 : W y = rhs} is nonempty (phase-1 simplex)."""
    A, b = _standardize(W, rhs)
    _, _, infeas, _ = _phase_one(A, b, 50 * sum(A.shape))
    return infeas < PHASE_ONE_TOL


# -- cones -------------------------------------------------------------------


def matrix_rank(W, rel_tol=RANK_TOL) -> int:
    """Rank by Gaussian elimination with full pivoting.

    Entries below ``rel_tol`` times the first (largest) pivot count as zero.
    """
    A = as_matrix(W)
    rows, cols = A.shape
    rank = 0
    first = None
    for r in range(min(rows, cols)):
        sub = np.abs(A[r:, r:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        piv = sub[i, j]
        if first is None:
            first = piv
        if piv == 0.0 or piv <= rel_tol * first:
            break
        i += r
        j += r
        A[[r, i]] = A[[i, r]]
        A[:, [r, j]] = A[:, [j, r]]
        A[r + 1 :] -= np.outer(A[r + 1 :, r] / A[r, r], A[r])
        rank += 1
    return rank


def pointedness_check(W) -> bool:
    """True iff {a : a^T W = 0} = {0}, i.e. rank(W) equals its row count."""
    A = as_matrix(W)
    return matrix_rank(A) == A.shape[0]


def _lineality_direction(W):
    _, _, vt = np.linalg.svd(W.T)
    return vt[-1]


def normalize_ray(r) -> np.ndarray:
    """Scale by a positive factor so the largest-magnitude entry is exactly +1 or -1."""
    r = np.asarray(r, dtype=float)
    k = int(np.argmax(np.abs(r)))
    out = r / abs(r[k])
    out[k] = np.sign(r[k])
    return out


@dataclass(frozen=True)
class RaySet:
    """Non-equivalent extreme rays of a pointed cone in R^dim, one per row."""

    dim: int
    rays: np.ndarray = field(repr=False)

    def __post_init__(self):
        R = np.array(self.rays, dtype=float).reshape(-1, self.dim)
        R.setflags(write=False)
        object.__setattr__(self, "rays", R)

    def __len__(self):
        return self.rays.shape[0]

    def to_json(self) -> dict:
        return {"dim": self.dim, "rays": [[float(v) for v in r] for r in self.rays]}

    @classmethod
    def from_json(cls, doc):
        extra = set(doc) - {"dim", "rays", "schema_version"}
        if extra:
            raise SchemaError(f"unknown ray-set fields: {sorted(extra)}")
        return cls(dim=int(doc["dim"]), rays=np.asarray(doc["rays"], dtype=float).reshape(-1, int(doc["dim"])))


def _independent_columns(G, tol=RANK_TOL):
    """Indices of a maximal set of linearly independent columns, greedily from the left."""
    chosen, Q = [], []
    scale = max(np.abs(G).max(), 1.0)
    for j in range(G.shape[1]):
        v = G[:, j].copy()
        for q in Q:
            v -= (q @ v) * q
        norm = np.linalg.norm(v)
        if norm > tol * scale * 1e2:
            Q.append(v / norm)
            chosen.append(j)
            if len(chosen) == G.shape[0]:
                break
    return chosen


def _dedupe(R, Z):
    seen, keep = set(), []
    for i, r in enumerate(R):
        key = tuple(np.round(r, 9))
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return R[keep], Z[keep]


def enumerate_extreme_rays(W, cap: int = DEFAULT_RAY_CAP, tol: float = RAY_TOL) -> RaySet:
    """Extreme rays of {a in R^m1 : a^T W >= 0} by the double description method.

    Starts from the simplicial cone cut out by m1 independent columns of W,
    whose rays are the columns of (B^T)^{-1}, then inserts the remaining
    constraints one at a time. New rays are formed only from adjacent
    (+, -) pairs, found with the combinatorial zero-set test.
    """
    W = as_matrix(W, "W")
    m1, n1 = W.shape
    if n1 > 64:
        raise CapacityError(f"W has {n1} columns; ray enumeration supports at most 64")
    if not pointedness_check(W):
        raise NotPointedError("cone {a : a^T W >= 0} is not pointed (rank W < rows)", _lineality_direction(W))
    norms = np.abs(W).max(axis=0)
    G = W / np.where(norms > 0, norms, 1.0)
    live = [j for j in range(n1) if norms[j] > 0]
    basis = _independent_columns(G[:, live])
    basis = [live[j] for j in basis]
    R = np.linalg.inv(G[:, basis].T).T  # row k: tight on every basis column except k
    R = np.array([normalize_ray(r) for r in R])
    if len(R) > cap:
        raise CapacityError(f"more than {cap} extreme rays")
    Z = np.zeros(len(R), dtype=np.uint64)
    done = list(basis)
    for k in range(len(R)):
        for j in done:
            if abs(G[:, j] @ R[k]) <= tol:
                Z[k] |= np.uint64(1 << j)
    for j in live:
        if j in basis:
            continue
        s = R @ G[:, j]
        plus = np.flatnonzero(s > tol)
        minus = np.flatnonzero(s < -tol)
        zero = np.flatnonzero(np.abs(s) <= tol)
        bit = np.uint64(1 << j)
        if minus.size == 0:
            Z[zero] |= bit
            continue
        pairs = kernels.adjacent_pairs(Z, plus, minus, m1 - 2)
        new_R = [s[p] * R[n] - s[n] * R[p] for p, n in pairs]
        new_Z = [(Z[p] & Z[n]) | bit for p, n in pairs]
        keep = np.concatenate([plus, zero])
        Z[zero] |= bit
        R_keep, Z_keep = R[keep], Z[keep]
        if new_R:
            R = np.vstack([R_keep, [normalize_ray(r) for r in new_R]])
            Z = np.concatenate([Z_keep, np.array(new_Z, dtype=np.uint64)])
        else:
            R, Z = R_keep, Z_keep
        R, Z = _dedupe(R, Z)
        if len(R) > cap:
            raise CapacityError(f"more than {cap} extreme rays")
    R = R.reshape(-1, m1)
    order = np.lexsort(R.T[::-1]) if len(R) else np.arange(0)
    return RaySet(dim=m1, rays=R[order])


def farkas_in_domain(rays: RaySet, T, h, x, tol: float = RAY_TOL) -> bool:
    """x is in dom f_xi iff a^T (h - T x) >= 0 for every extreme ray a."""
    T = as_matrix(T, "T")
    h = np.asarray(h, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if T.shape != (rays.dim, x.shape[0]) or h.shape[0] != rays.dim:
        raise DimensionError(f"T {T.shape}, h {h.shape}, x {x.shape} inconsistent with rays in R^{rays.dim}")
    if len(rays) == 0:
        return True
    return bool((rays.rays @ (h - T @ x)).min() >= -tol)


def cone_membership(rays: RaySet, v, tol: float = PHASE_ONE_TOL) -> bool:
    """True iff v is a nonnegative combination of the rays."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != rays.dim:
        raise DimensionError(f"vector of length {v.shape[0]} for rays in R^{rays.dim}")
    if len(rays) == 0:
        return bool(np.abs(v).max() <= tol)
    return lp_feasible_nonneg(rays.rays.T, v)


class RayCache:
    """Extreme rays per distinct recourse matrix, keyed by exact content hash."""

    def __init__(self, cap: int = DEFAULT_RAY_CAP):
        self.cap = cap
        self._rays = {}

    def get(self, W) -> Optional[RaySet]:
        """Ray set for ``W``, or None when the cone is not pointed."""
        key = matrix_key(W)
        if key not in self._rays:
            try:
                self._rays[key] = enumerate_extreme_rays(W, cap=self.cap)
            except NotPointedError:
                self._rays[key] = None
        return self._rays[key]

    def __len__(self):
        return len(self._rays)
