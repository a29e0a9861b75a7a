"""VC-dimension calculus for the hypothesis classes that describe feasible domains.

Upper bounds come from closed forms for the basic classes and from the
composition rule for finite intersections/unions of classes::

    d_VC(C_1 ∩ ... ∩ C_m) <= K * (d_1 + ... + d_m) * ln(e * m / ln 2),
    K = e / ((e - 1) ln 2) ≈ 2.2823.

Lower bounds are certified by brute-force shattering of finite traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union as TypingUnion

import numpy as np

from . import kernels
from .errors import CapacityError, InvalidInput, SchemaError

LN2 = math.log(2.0)
#: e / ((e - 1) ln 2), the leading constant of the composition bound
COMPOSITION_CONSTANT = math.e / ((math.e - 1.0) * LN2)
_E_OVER_LN2 = math.e / LN2

DEFAULT_MAX_TRACE_POINTS = 20


def _check_int(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidInput(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidInput(f"{name} must be >= {minimum}, got {value}")


@dataclass(frozen=True)
class Atom:
    """A class whose VC dimension ``d`` is already known."""

    d: int

    def __post_init__(self):
        _check_int("d", self.d, 0)


@dataclass(frozen=True)
class Halfspace:
    """Halfspaces in R^dim; through the origin unless ``affine``."""

    dim: int
    affine: bool = True

    def __post_init__(self):
        _check_int("dim", self.dim, 1)
        if not isinstance(self.affine, bool):
            raise InvalidInput("affine must be a boolean")


@dataclass(frozen=True)
class DualHalfspace:
    """Sets {(y, z) : y^T x <= z} indexed by x in R^dim."""

    dim: int

    def __post_init__(self):
        _check_int("dim", self.dim, 1)


@dataclass(frozen=True)
class SparseDualHalfspace:
    """DualHalfspace restricted to x with at most ``sparsity`` nonzeros."""

    dim: int
    sparsity: int

    def __post_init__(self):
        _check_int("dim", self.dim, 1)
        _check_int("sparsity", self.sparsity, 0)
        if self.sparsity > self.dim:
            raise InvalidInput(f"sparsity {self.sparsity} exceeds dim {self.dim}")


@dataclass(frozen=True)
class FiniteClass:
    cardinality: int

    def __post_init__(self):
        _check_int("cardinality", self.cardinality, 1)


@dataclass(frozen=True)
class Chain:
    """Chain-constrained domain: intersections of ``order`` nested set families."""

    order: int

    def __post_init__(self):
        _check_int("order", self.order, 1)


@dataclass(frozen=True)
class Intersect:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise InvalidInput("intersect needs at least one child")


@dataclass(frozen=True)
class Union:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise InvalidInput("union needs at least one child")


VcExpr = TypingUnion[Atom, Halfspace, DualHalfspace, SparseDualHalfspace, FiniteClass, Chain, Intersect, Union]


def composition_bound(child_bounds: Sequence[float]) -> float:
    """Bound for the intersection or union of ``m`` classes with the given VC bounds.

    A single class is returned unchanged; the composition rule is looser
    than the class itself when m = 1.
    """
    m = len(child_bounds)
    if m == 0:
        raise InvalidInput("composition of zero classes")
    if m == 1:
        return float(child_bounds[0])
    return COMPOSITION_CONSTANT * math.fsum(child_bounds) * math.log(_E_OVER_LN2 * m)


def sparse_halfspace_vc(dim: int, sparsity: int) -> float:
    return 2.0 * (sparsity + 1) * math.log2((dim * math.e + math.e) / (sparsity + 1))


def chain_vc(order: int) -> float:
    formula = COMPOSITION_CONSTANT * order * math.log(_E_OVER_LN2 * order)
    # a single chain cannot shatter two points
    return min(formula, 1.0) if order == 1 else formula


def eval_vc_upper(expr: VcExpr) -> float:
    """Upper bound on the VC dimension of the class described by ``expr``."""
    if isinstance(expr, Atom):
        return float(expr.d)
    if isinstance(expr, Halfspace):
        return float(expr.dim + 1 if expr.affine else expr.dim)
    if isinstance(expr, DualHalfspace):
        return float(expr.dim)
    if isinstance(expr, SparseDualHalfspace):
        return sparse_halfspace_vc(expr.dim, expr.sparsity)
    if isinstance(expr, FiniteClass):
        return math.log2(expr.cardinality)
    if isinstance(expr, Chain):
        return chain_vc(expr.order)
    if isinstance(expr, (Intersect, Union)):
        return composition_bound([eval_vc_upper(c) for c in expr.children])
    raise InvalidInput(f"not a VC expression: {expr!r}")


def two_stage_vc(n: int, J: int) -> float:
    """VC bound for two-stage linear recourse with ``J`` extreme rays in total.

    The feasible domain is an intersection of J classes of dual halfspaces
    over R^(n+1).
    """
    _check_int("n", n, 1)
    _check_int("J", J, 1)
    return COMPOSITION_CONSTANT * J * (n + 1) * math.log(_E_OVER_LN2 * J)


def mip_vc(n: int, J: int, zcard: int) -> float:
    """VC bound for mixed-integer recourse whose integer part takes ``zcard`` values."""
    _check_int("n", n, 1)
    _check_int("J", J, 1)
    _check_int("zcard", zcard, 1)
    return (
        COMPOSITION_CONSTANT**2
        * zcard
        * J
        * (n + 2)
        * math.log(_E_OVER_LN2 * J)
        * math.log(_E_OVER_LN2 * zcard)
    )


def sparse_two_stage_vc(n: int, n0: int, J: int) -> float:
    """Two-stage bound when candidate solutions have at most ``n0`` nonzeros."""
    _check_int("n", n, 1)
    _check_int("n0", n0, 0)
    _check_int("J", J, 1)
    if n0 > n:
        raise InvalidInput(f"n0={n0} exceeds n={n}")
    return COMPOSITION_CONSTANT * J * sparse_halfspace_vc(n, n0) * math.log(_E_OVER_LN2 * J)


def chain_order_two_stage(q: int, ray_counts: Sequence[int]) -> int:
    """Order of the chain-constrained domain: q times the total ray count."""
    _check_int("q", q, 1)
    if len(ray_counts) == 0:
        raise InvalidInput("ray_counts must be nonempty")
    for c in ray_counts:
        _check_int("ray count", c, 1)
    return q * sum(ray_counts)


def extreme_ray_count_bound(m1: int, n1: int) -> int:
    """Combinatorial ceiling C(n1, m1 - 1) on extreme rays of {a : a^T W >= 0}."""
    _check_int("m1", m1, 1)
    _check_int("n1", n1, 1)
    return math.comb(n1, m1 - 1)


# -- shattering --------------------------------------------------------------


@dataclass(frozen=True)
class FiniteTrace:
    """A finite class restricted to a finite point set.

    ``sets[s][p]`` is truthy iff point ``points[p]`` belongs to set ``s``.
    """

    points: tuple
    sets: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        rows = tuple(tuple(bool(b) for b in row) for row in self.sets)
        object.__setattr__(self, "sets", rows)
        if not rows:
            raise InvalidInput("a trace needs at least one set")
        for row in rows:
            if len(row) != len(self.points):
                raise InvalidInput(f"bit-vector of length {len(row)} for {len(self.points)} points")

    def masks(self) -> np.ndarray:
        out = np.zeros(len(self.sets), dtype=np.uint64)
        for s, row in enumerate(self.sets):
            out[s] = sum(1 << p for p, b in enumerate(row) if b)
        return out

    @property
    def n_distinct(self) -> int:
        return len(set(self.sets))


def empirical_vc(trace: FiniteTrace, max_points: int = DEFAULT_MAX_TRACE_POINTS) -> int:
    """Exact VC dimension of a traced class, by exhaustive subset search."""
    n = len(trace.points)
    if n > max_points or n > 63:
        raise CapacityError(f"trace has {n} points; cap is {min(max_points, 63)}")
    if n == 0:
        return 0
    k_max = int(math.floor(math.log2(trace.n_distinct)))
    return int(kernels.max_shattered(trace.masks(), n, k_max))


def interval_trace(points: Sequence[float]) -> FiniteTrace:
    """Trace of closed intervals [a, b] on the given points.

    Endpoints range over a grid containing every point, every midpoint and
    one value beyond each end, which realises every interval pattern.
    """
    xs = np.sort(np.asarray(points, dtype=float))
    mids = (xs[1:] + xs[:-1]) / 2
    grid = np.concatenate([[xs[0] - 1.0], xs, mids, [xs[-1] + 1.0]])
    grid.sort()
    pts = np.asarray(points, dtype=float)
    sets = {tuple(bool(v) for v in (pts >= a) & (pts <= b)) for a in grid for b in grid}
    return FiniteTrace(points=tuple(points), sets=tuple(sorted(sets)))


def halfspace_trace(points, n_directions=64, n_random=256, seed=0, affine=True) -> FiniteTrace:
    """Trace of halfspaces {x : w^T x <= b} on the rows of ``points``.

    Directions are a deterministic angular grid (in R^2) or Gaussian draws,
    plus ``n_random`` seeded Gaussian directions. For each direction the
    offsets are every midpoint between consecutive projections and one value
    past each extreme; for homogeneous halfspaces b = 0.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    dim = P.shape[1]
    rng = np.random.default_rng(seed)
    if dim == 2:
        angles = np.linspace(0.0, 2 * np.pi, n_directions, endpoint=False)
        grid = np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        grid = rng.standard_normal((n_directions, dim))
    dirs = np.vstack([grid, rng.standard_normal((n_random, dim))])
    sets = set()
    for w in dirs:
        proj = P @ w
        if affine:
            s = np.sort(proj)
            offsets = np.concatenate([[s[0] - 1.0], (s[1:] + s[:-1]) / 2, [s[-1] + 1.0]])
        else:
            offsets = [0.0]
        for b in offsets:
            sets.add(tuple(bool(v) for v in proj <= b))
    labels = tuple(tuple(float(v) for v in row) for row in P)
    return FiniteTrace(points=labels, sets=tuple(sorted(sets)))


# -- JSON --------------------------------------------------------------------

_FIELDS = {
    "atom": (Atom, ("d",)),
    "halfspace": (Halfspace, ("dim", "affine")),
    "dual_halfspace": (DualHalfspace, ("dim",)),
    "sparse_dual_halfspace": (SparseDualHalfspace, ("dim", "sparsity")),
    "finite": (FiniteClass, ("cardinality",)),
    "chain": (Chain, ("order",)),
}
_OPS = {cls: op for op, (cls, _) in _FIELDS.items()}


def expr_to_json(expr: VcExpr) -> dict:
    if isinstance(expr, (Intersect, Union)):
        op = "intersect" if isinstance(expr, Intersect) else "union"
        return {"op": op, "children": [expr_to_json(c) for c in expr.children]}
    op = _OPS[type(expr)]
    return {"op": op, **{f: getattr(expr, f) for f in _FIELDS[op][1]}}


def expr_from_json(doc, _top=True) -> VcExpr:
    """Parse a JSON expression tree. Unknown fields are rejected."""
    if not isinstance(doc, dict):
        raise SchemaError(f"expression node must be an object, got {type(doc).__name__}")
    doc = dict(doc)
    if _top and "schema_version" in doc:
        if doc.pop("schema_version") != 1:
            raise SchemaError("unsupported schema_version")
    op = doc.pop("op", None)
    if op in ("intersect", "union"):
        children = doc.pop("children", None)
        if doc:
            raise SchemaError(f"unknown fields for {op}: {sorted(doc)}")
        if not isinstance(children, list):
            raise SchemaError(f"{op} requires a 'children' list")
        parsed = [expr_from_json(c, _top=False) for c in children]
        return Intersect(parsed) if op == "intersect" else Union(parsed)
    if op not in _FIELDS:
        raise SchemaError(f"unknown op {op!r}")
    cls, fields = _FIELDS[op]
    extra = set(doc) - set(fields)
    if extra:
        raise SchemaError(f"unknown fields for {op}: {sorted(extra)}")
    try:
        return cls(**doc)
    except TypeError as exc:
        raise SchemaError(str(exc)) from None
