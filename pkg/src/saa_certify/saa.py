"""Two-stage stochastic linear programs with linear recourse, and their SAA.

A scenario is the data (W, T, h, q) of the recourse problem

    f(xi, x) = min_y q^T y   s.t.  W y + T x = h,  y >= 0.

The resource-planning example (``TrpGenerator``) has demands xi uniform on
[0, 1]^n and recourse ``y <= x - xi, y >= 0``. In equality form with a
slack s this reads ``[I I](y, s) - x = -xi``, i.e. W = [I I], T = -I,
h = -xi.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionError,
    FeasibilityAssertionError,
    InfeasibleSaaError,
    InvalidInput,
    SchemaError,
    UnboundedSaaError,
)
from .polyhedral import (
    RAY_TOL,
    RayCache,
    as_matrix,
    lp_feasible_nonneg,
    lp_solve,
    matrix_from_json,
    matrix_to_json,
)

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for (seed, key1, key2, ...); independent of evaluation order."""
    s = splitmix64(seed & _MASK64)
    for k in keys:
        s = splitmix64(splitmix64(s) ^ (k & _MASK64))
    return s


def _vec(v, name):
    a = np.array(v, dtype=float, ndmin=1).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise DimensionError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class Scenario:
    W: np.ndarray
    T: np.ndarray
    h: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        W, T = as_matrix(self.W, "W"), as_matrix(self.T, "T")
        h, q = _vec(self.h, "h"), _vec(self.q, "q")
        m1, n1 = W.shape
        if T.shape[0] != m1 or h.shape[0] != m1 or q.shape[0] != n1:
            raise DimensionError(f"scenario shapes W {W.shape}, T {T.shape}, h {h.shape}, q {q.shape} disagree")
        for name, arr in (("W", W), ("T", T), ("h", h), ("q", q)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.T.shape[1]

    def to_json(self):
        return {"W": matrix_to_json(self.W), "T": matrix_to_json(self.T), "h": self.h.tolist(), "q": self.q.tolist()}

    @classmethod
    def from_json(cls, doc):
        _reject_unknown(doc, {"W", "T", "h", "q"}, "scenario")
        return cls(matrix_from_json(doc["W"]), matrix_from_json(doc["T"]), doc["h"], doc["q"])


# -- scenario sources --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteSupport:
    scenarios: tuple
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        if not self.scenarios or len(w) != len(self.scenarios):
            raise InvalidInput("finite support needs one weight per scenario")
        if min(w) < 0 or abs(math.fsum(w) - 1.0) > 1e-12:
            raise InvalidInput("weights must be nonnegative and sum to 1")

    def sample(self, rng, N):
        idx = rng.choice(len(self.scenarios), size=N, p=np.asarray(self.weights))
        return [self.scenarios[i] for i in idx]


@dataclass(frozen=True, eq=False)
class TrpGenerator:
    """Resource-planning example: demands i.i.d. uniform on [0, 1]^n."""

    n: int
    c: tuple
    q: tuple

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInput("n must be positive")
        c, q = _vec(self.c, "c"), _vec(self.q, "q")
        if c.shape[0] != self.n or q.shape[0] != self.n:
            raise DimensionError("c and q must have n entries")
        if np.any(c <= 0) or np.any(q <= 0):
            raise InvalidInput("resource planning needs c > 0 and q > 0")
        object.__setattr__(self, "c", tuple(c))
        object.__setattr__(self, "q", tuple(q))
        eye = np.eye(self.n)
        object.__setattr__(self, "_W", np.hstack([eye, eye]))
        object.__setattr__(self, "_T", -eye)
        object.__setattr__(self, "_qfull", np.concatenate([q, np.zeros(self.n)]))

    def sample_demands(self, rng, N):
        return rng.random((N, self.n))

    def scenario(self, xi):
        return Scenario(self._W, self._T, -np.asarray(xi, dtype=float), self._qfull)

    def sample(self, rng, N):
        return [self.scenario(xi) for xi in self.sample_demands(rng, N)]


@dataclass(frozen=True, eq=False)
class UniformEntryGenerator:
    """Every entry of W (m1 x n1), T (m1 x n), h and q drawn uniformly from its range."""

    m1: int
    n1: int
    n: int
    ranges: dict = field(default_factory=dict)

    _DEFAULT = {"W": (-1.0, 1.0), "T": (-1.0, 1.0), "h": (-1.0, 1.0), "q": (0.0, 1.0)}

    def __post_init__(self):
        if min(self.m1, self.n1, self.n) < 1:
            raise InvalidInput("dimensions must be positive")
        unknown = set(self.ranges) - set(self._DEFAULT)
        if unknown:
            raise SchemaError(f"unknown range keys {sorted(unknown)}")
        full = dict(self._DEFAULT)
        for k, (lo, hi) in self.ranges.items():
            if not lo <= hi:
                raise InvalidInput(f"range for {k} is empty")
            full[k] = (float(lo), float(hi))
        object.__setattr__(self, "ranges", full)

    def sample(self, rng, N):
        r = self.ranges
        out = []
        for _ in range(N):
            W = rng.uniform(*r["W"], size=(self.m1, self.n1))
            T = rng.uniform(*r["T"], size=(self.m1, self.n))
            h = rng.uniform(*r["h"], size=self.m1)
            q = rng.uniform(*r["q"], size=self.n1)
            out.append(Scenario(W, T, h, q))
        return out


ScenarioSource = FiniteSupport | TrpGenerator | UniformEntryGenerator


@dataclass(frozen=True, eq=False)
class TwoStageProblem:
    """min c^T x + E f(xi, x) over {x : A x <= b} (and x >= 0 if ``x_nonneg``)."""

    n: int
    c: np.ndarray
    source: ScenarioSource
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    x_nonneg: bool = True

    def __post_init__(self):
        c = _vec(self.c, "c")
        if c.shape[0] != self.n:
            raise DimensionError(f"c has {c.shape[0]} entries, expected {self.n}")
        object.__setattr__(self, "c", c)
        if (self.A is None) != (self.b is None):
            raise InvalidInput("first-stage A and b must be given together")
        if self.A is not None:
            A, b = as_matrix(self.A, "A"), _vec(self.b, "b")
            if A.shape != (b.shape[0], self.n):
                raise DimensionError(f"first-stage A {A.shape} inconsistent with b {b.shape} and n={self.n}")
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "b", b)

    @property
    def is_trp(self):
        return isinstance(self.source, TrpGenerator)


def trp_problem(n: int, c=None, q=None) -> TwoStageProblem:
    c = np.ones(n) if c is None else c
    q = np.ones(n) if q is None else q
    return TwoStageProblem(n=n, c=c, source=TrpGenerator(n, c, q))


def draw_scenarios(source: ScenarioSource, N: int, seed: int) -> list:
    if N < 1:
        raise InvalidInput("N must be positive")
    if not hasattr(source, "sample"):
        raise InvalidInput(f"not a scenario source: {source!r}")
    rng = np.random.default_rng(seed & _MASK64)
    return source.sample(rng, N)


# -- deterministic equivalent ------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeterministicEquivalent:
    """Standard-form LP ``min c^T z, A z = b, z >= 0`` with its block index maps."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    x_cols: slice
    x_neg_cols: Optional[slice]
    slack_cols: slice
    y_cols: tuple
    first_stage_rows: slice
    scenario_rows: tuple

    def extract_x(self, z):
        x = z[self.x_cols].copy()
        if self.x_neg_cols is not None:
            x -= z[self.x_neg_cols]
        return x


def build_deterministic_equivalent(problem: TwoStageProblem, scenarios: Sequence[Scenario]) -> DeterministicEquivalent:
    N = len(scenarios)
    if N == 0:
        raise InvalidInput("need at least one scenario")
    n = problem.n
    for i, s in enumerate(scenarios):
        if s.n != n:
            raise DimensionError(f"scenario {i} has T with {s.n} columns, expected {n}")
    k = 0 if problem.A is None else problem.A.shape[0]
    split = not problem.x_nonneg
    col = 0
    x_cols = slice(col, col + n)
    col += n
    x_neg = None
    if split:
        x_neg = slice(col, col + n)
        col += n
    slack = slice(col, col + k)
    col += k
    y_cols = []
    for s in scenarios:
        y_cols.append(slice(col, col + s.W.shape[1]))
        col += s.W.shape[1]
    rows = k + sum(s.W.shape[0] for s in scenarios)
    A = np.zeros((rows, col))
    b = np.zeros(rows)
    c = np.zeros(col)
    c[x_cols] = problem.c
    if split:
        c[x_neg] = -problem.c
    fs_rows = slice(0, k)
    if k:
        A[fs_rows, x_cols] = problem.A
        if split:
            A[fs_rows, x_neg] = -problem.A
        A[fs_rows, slack] = np.eye(k)
        b[fs_rows] = problem.b
    r = k
    sc_rows = []
    for s, yc in zip(scenarios, y_cols):
        rs = slice(r, r + s.W.shape[0])
        A[rs, yc] = s.W
        A[rs, x_cols] = s.T
        if split:
            A[rs, x_neg] = -s.T
        b[rs] = s.h
        c[yc] = s.q / N
        sc_rows.append(rs)
        r = rs.stop
    return DeterministicEquivalent(c, A, b, x_cols, x_neg, slack, tuple(y_cols), fs_rows, tuple(sc_rows))


# -- solving -----------------------------------------------------------------


def sample_fingerprint(scenarios: Sequence[Scenario]) -> str:
    h = hashlib.sha256()
    for s in scenarios:
        for arr in (s.W, s.T, s.h, s.q):
            h.update(repr(arr.shape).encode())
            h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


@dataclass(frozen=True, eq=False)
class SaaSolution:
    x: np.ndarray
    objective: float
    status: str
    sample_fingerprint: str

    def to_json(self):
        return {
            "status": self.status,
            "x": [float(v) for v in self.x],
            "objective": float(self.objective),
            "sample_fingerprint": self.sample_fingerprint,
        }


def recourse_feasible(scenario: Scenario, x, cache: Optional[RayCache] = None) -> bool:
    """Farkas test over cached extreme rays; phase-1 LP when W is not pointed."""
    cache = RayCache() if cache is None else cache
    rays = cache.get(scenario.W)
    slack = scenario.h - scenario.T @ x
    if rays is None:
        return lp_feasible_nonneg(scenario.W, slack)
    if len(rays) == 0:
        return True
    tol = RAY_TOL * max(1.0, float(np.abs(scenario.h).max()), float(np.abs(scenario.T @ x).max()))
    return bool((rays.rays @ slack).min() >= -tol)


def _blocking_scenario(problem, scenarios):
    """Smallest i such that scenarios[:i+1] already make the SAA infeasible."""

    def feasible(k):
        de = build_deterministic_equivalent(problem, scenarios[:k])
        return lp_feasible_nonneg(de.A, de.b)

    if not feasible(1):
        return 0
    lo, hi = 1, len(scenarios)  # feasible(lo) is True, feasible(hi) is False
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return hi - 1


def solve_saa(problem: TwoStageProblem, scenarios: Sequence[Scenario], cache: Optional[RayCache] = None) -> SaaSolution:
    """Solve the SAA deterministic equivalent and check recourse feasibility per scenario."""
    de = build_deterministic_equivalent(problem, scenarios)
    out = lp_solve(de.c, de.A, de.b)
    if out.status == "infeasible":
        idx = _blocking_scenario(problem, list(scenarios))
        raise InfeasibleSaaError(f"SAA problem is infeasible; scenario {idx} blocks", scenario_index=idx)
    if out.status == "unbounded":
        raise UnboundedSaaError("SAA problem is unbounded")
    x = de.extract_x(out.x)
    cache = RayCache() if cache is None else cache
    for i, s in enumerate(scenarios):
        if not recourse_feasible(s, x, cache):
            raise FeasibilityAssertionError(f"SAA solution fails recourse feasibility on scenario {i}")
    return SaaSolution(x=x, objective=out.objective, status="optimal", sample_fingerprint=sample_fingerprint(scenarios))


def solve_trp_analytic(samples) -> np.ndarray:
    """The SAA optimum of the resource-planning example: componentwise max of the demands."""
    S = np.asarray(samples, dtype=float)
    if S.size == 0:
        raise InvalidInput("need at least one sample")
    S = np.atleast_2d(S)
    if np.any(S < 0) or np.any(S > 1):
        raise InvalidInput("demands must lie in [0, 1]")
    return S.max(axis=0)


def violation_exact_trp(x) -> float:
    """V(x) = 1 - prod(x) for uniform demands on [0, 1]^n."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if np.any(x < 0) or np.any(x > 1):
        raise InvalidInput("x must lie in [0, 1]^n")
    return float(1.0 - np.prod(x))


# -- Monte Carlo violation ---------------------------------------------------


def wilson_interval(successes: int, trials: int, alpha: float = 0.05) -> tuple:
    from statsmodels.stats.proportion import proportion_confint

    lo, hi = proportion_confint(successes, trials, alpha=alpha, method="wilson")
    return float(lo), float(hi)


@dataclass(frozen=True)
class ViolationEstimate:
    estimate: float
    stderr: float
    ci95: tuple
    M: int

    def to_json(self):
        return {"estimate": self.estimate, "stderr": self.stderr, "ci95": list(self.ci95), "M": self.M}


def violation_monte_carlo(problem: TwoStageProblem, x, M: int, seed: int, cache: Optional[RayCache] = None) -> ViolationEstimate:
    """Fraction of M fresh scenarios whose recourse is infeasible at x."""
    if isinstance(M, bool) or int(M) != M or M < 1:
        raise InvalidInput(f"M must be a positive integer, got {M!r}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != problem.n:
        raise DimensionError(f"x has {x.shape[0]} entries, expected {problem.n}")
    rng = np.random.default_rng(seed & _MASK64)
    cache = RayCache() if cache is None else cache
    src = problem.source
    if isinstance(src, TrpGenerator):
        # W and T are fixed, so the Farkas test vectorises over all draws
        xi = src.sample_demands(rng, M)
        rays = cache.get(src._W)
        slack = -xi - (src._T @ x)[None, :]
        bad = int(np.count_nonzero((slack @ rays.rays.T).min(axis=1) < -RAY_TOL))
    else:
        bad = sum(not recourse_feasible(s, x, cache) for s in src.sample(rng, M))
    p = bad / M
    return ViolationEstimate(p, math.sqrt(p * (1 - p) / M), wilson_interval(bad, M), M)


# -- JSON --------------------------------------------------------------------


def _reject_unknown(doc, allowed, what):
    if not isinstance(doc, dict):
        raise SchemaError(f"{what} must be an object")
    extra = set(doc) - set(allowed)
    if extra:
        raise SchemaError(f"unknown {what} fields: {sorted(extra)}")


def problem_to_json(problem: TwoStageProblem) -> dict:
    src = problem.source
    if isinstance(src, TrpGenerator):
        sdoc = {"kind": "trp", "q": list(src.q)}
    elif isinstance(src, FiniteSupport):
        sdoc = {"kind": "finite", "scenarios": [s.to_json() for s in src.scenarios], "weights": list(src.weights)}
    else:
        sdoc = {"kind": "uniform", "m1": src.m1, "n1": src.n1, "ranges": {k: list(v) for k, v in src.ranges.items()}}
    fs = {"x_nonneg": problem.x_nonneg}
    if problem.A is not None:
        fs["A"] = matrix_to_json(problem.A)
        fs["b"] = problem.b.tolist()
    return {"schema_version": 1, "n": problem.n, "c": problem.c.tolist(), "first_stage": fs, "source": sdoc}


def problem_from_json(doc) -> TwoStageProblem:
    _reject_unknown(doc, {"schema_version", "n", "c", "first_stage", "source"}, "problem")
    if doc.get("schema_version", 1) != 1:
        raise SchemaError("unsupported schema_version")
    try:
        n, c, sdoc = int(doc["n"]), doc["c"], doc["source"]
    except KeyError as exc:
        raise SchemaError(f"problem is missing {exc}") from None
    fs = doc.get("first_stage", {})
    _reject_unknown(fs, {"A", "b", "x_nonneg"}, "first_stage")
    A = matrix_from_json(fs["A"]) if fs.get("A") is not None else None
    b = fs.get("b") if A is not None else None
    kind = sdoc.get("kind") if isinstance(sdoc, dict) else None
    if kind == "trp":
        _reject_unknown(sdoc, {"kind", "q"}, "trp source")
        source = TrpGenerator(n, c, sdoc.get("q", [1.0] * n))
    elif kind == "finite":
        _reject_unknown(sdoc, {"kind", "scenarios", "weights"}, "finite source")
        scen = [Scenario.from_json(s) for s in sdoc["scenarios"]]
        source = FiniteSupport(scen, sdoc.get("weights", [1.0 / len(scen)] * len(scen)))
    elif kind == "uniform":
        _reject_unknown(sdoc, {"kind", "m1", "n1", "ranges"}, "uniform source")
        ranges = {k: tuple(v) for k, v in sdoc.get("ranges", {}).items()}
        source = UniformEntryGenerator(int(sdoc["m1"]), int(sdoc["n1"]), n, ranges)
    else:
        raise SchemaError(f"unknown source kind {kind!r}")
    return TwoStageProblem(n=n, c=c, source=source, A=A, b=b, x_nonneg=bool(fs.get("x_nonneg", True)))
