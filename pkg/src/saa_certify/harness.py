"""Replicated SAA experiments: estimate P^N(V(x*) > eps) and set it against the bounds."""

from __future__ import annotations

import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import bounds as B
from .errors import InvalidInput, SaaCertifyError, SchemaError
from .polyhedral import RayCache
from .saa import (
    TrpGenerator,
    TwoStageProblem,
    derive_seed,
    draw_scenarios,
    problem_from_json,
    problem_to_json,
    solve_saa,
    solve_trp_analytic,
    violation_exact_trp,
    violation_monte_carlo,
    wilson_interval,
)
from .vc import eval_vc_upper, expr_from_json, two_stage_vc

DEFAULT_SEED = 20240917
THREADS_ENV = "SAA_CERTIFY_THREADS"

BOUND_FAMILIES = ("vc-tail", "gamma-tail-trp", "chain-binomial", "chain-chernoff", "finite-direct")


class ReplicationError(SaaCertifyError):
    def __init__(self, replication, cause):
        super().__init__(f"replication {replication} failed: {cause}")
        self.replication = replication
        self.cause = cause


def thread_count(default=1):
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInput(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise InvalidInput(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class BoundRequest:
    """A bound to attach to every row. ``params`` depend on the family:

    vc-tail: ``d`` | ``two_stage: {n, J}`` | ``expr`` (a VC expression);
    gamma-tail-trp: ``n``; chain-binomial/chain-chernoff: ``m``;
    finite-direct: ``infeasible_count``, ``eta``.
    """

    family: str
    params: dict = field(default_factory=dict)
    label: Optional[str] = None

    def __post_init__(self):
        if self.family not in BOUND_FAMILIES:
            raise SchemaError(f"unknown bound family {self.family!r}")
        if self.label is None:
            object.__setattr__(self, "label", self.family)

    def vc_dimension(self):
        p = self.params
        if "d" in p:
            return float(p["d"])
        if "two_stage" in p:
            return two_stage_vc(int(p["two_stage"]["n"]), int(p["two_stage"]["J"]))
        if "expr" in p:
            return eval_vc_upper(expr_from_json(p["expr"]))
        raise SchemaError("vc-tail needs one of d, two_stage, expr")

    def evaluate(self, N, epsilon, problem=None):
        p = self.params
        if self.family == "vc-tail":
            return B.vc_tail(N, self.vc_dimension(), epsilon)
        if self.family == "gamma-tail-trp":
            n = int(p.get("n", problem.n if problem is not None else 0))
            return B.Tail(B.gamma_tail_trp(n, N, epsilon))
        if self.family == "chain-binomial":
            return B.chain_binomial_tail(N, int(p["m"]), epsilon)
        if self.family == "chain-chernoff":
            return B.chain_chernoff_tail(N, int(p["m"]), epsilon)
        eta = float(p["eta"])
        if epsilon < eta:
            # only stated at level eta and above
            return B.Tail(1.0, vacuous=True)
        return B.finite_direct_tail(int(p["infeasible_count"]), eta, N)

    def to_json(self):
        return {"family": self.family, **self.params, "label": self.label}

    @classmethod
    def from_json(cls, doc):
        doc = dict(doc)
        family = doc.pop("family", None)
        label = doc.pop("label", None)
        allowed = {
            "vc-tail": {"d", "two_stage", "expr"},
            "gamma-tail-trp": {"n"},
            "chain-binomial": {"m"},
            "chain-chernoff": {"m"},
            "finite-direct": {"infeasible_count", "eta"},
        }.get(family)
        if allowed is None:
            raise SchemaError(f"unknown bound family {family!r}")
        extra = set(doc) - allowed
        if extra:
            raise SchemaError(f"unknown fields for {family}: {sorted(extra)}")
        return cls(family, doc, label)


@dataclass(frozen=True)
class ExperimentConfig:
    problem: TwoStageProblem
    N: int
    epsilons: tuple
    replications: int
    violation_mode: str = "exact-trp"  # or "monte-carlo"
    mc_samples: Optional[int] = None
    seed: int = DEFAULT_SEED
    bounds: tuple = ()
    solver: str = "auto"  # "analytic" (TRP only), "simplex", or "auto"

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "bounds", tuple(self.bounds))
        if not eps or any(not 0 < e < 1 for e in eps) or any(a >= b for a, b in zip(eps, eps[1:])):
            raise InvalidInput("epsilons must be nonempty, strictly increasing, inside (0, 1)")
        if self.N < 1 or self.replications < 1:
            raise InvalidInput("N and replications must be positive")
        if self.violation_mode not in ("exact-trp", "monte-carlo"):
            raise InvalidInput(f"unknown violation mode {self.violation_mode!r}")
        trp = isinstance(self.problem.source, TrpGenerator)
        if self.violation_mode == "exact-trp" and not trp:
            raise InvalidInput("exact-trp violation mode needs the resource-planning source")
        if self.violation_mode == "monte-carlo" and (self.mc_samples is None or self.mc_samples < 1):
            raise InvalidInput("monte-carlo violation mode needs a positive sample count M")
        if self.solver not in ("auto", "analytic", "simplex"):
            raise InvalidInput(f"unknown solver {self.solver!r}")
        if self.solver == "analytic" and not trp:
            raise InvalidInput("the analytic solver only applies to the resource-planning example")

    @property
    def uses_analytic(self):
        return self.solver == "analytic" or (self.solver == "auto" and isinstance(self.problem.source, TrpGenerator))

    def to_json(self):
        mode = {"kind": self.violation_mode}
        if self.violation_mode == "monte-carlo":
            mode["M"] = self.mc_samples
        return {
            "schema_version": 1,
            "problem": problem_to_json(self.problem),
            "N": self.N,
            "epsilons": list(self.epsilons),
            "replications": self.replications,
            "violation_mode": mode,
            "seed": self.seed,
            "solver": self.solver,
            "bounds": [b.to_json() for b in self.bounds],
        }

    @classmethod
    def from_json(cls, doc):
        allowed = {"schema_version", "problem", "N", "epsilons", "replications", "violation_mode", "seed", "solver", "bounds"}
        extra = set(doc) - allowed
        if extra:
            raise SchemaError(f"unknown config fields: {sorted(extra)}")
        if doc.get("schema_version", 1) != 1:
            raise SchemaError("unsupported schema_version")
        mode = doc.get("violation_mode", {"kind": "exact-trp"})
        if isinstance(mode, str):
            mode = {"kind": mode}
        if set(mode) - {"kind", "M"}:
            raise SchemaError(f"unknown violation_mode fields: {sorted(set(mode) - {'kind', 'M'})}")
        try:
            return cls(
                problem=problem_from_json(doc["problem"]),
                N=int(doc["N"]),
                epsilons=doc["epsilons"],
                replications=int(doc["replications"]),
                violation_mode=mode["kind"],
                mc_samples=mode.get("M"),
                seed=int(doc.get("seed", DEFAULT_SEED)),
                bounds=[BoundRequest.from_json(b) for b in doc.get("bounds", [])],
                solver=doc.get("solver", "auto"),
            )
        except KeyError as exc:
            raise SchemaError(f"config is missing {exc}") from None


# -- report ------------------------------------------------------------------


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ReportRow:
    epsilon: float
    empirical_prob: float
    stderr: float
    ci95: tuple
    bounds: dict


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple
    replications: int
    violations: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)

    @property
    def bound_labels(self):
        return list(self.rows[0].bounds) if self.rows else []

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(["epsilon", "empirical", "ci_lo", "ci_hi", *self.bound_labels]) + "\n")
        for r in self.rows:
            cells = [r.epsilon, r.empirical_prob, r.ci95[0], r.ci95[1], *(r.bounds[k] for k in self.bound_labels)]
            buf.write(",".join(fmt(v) for v in cells) + "\n")
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "rows": [
                {
                    "epsilon": r.epsilon,
                    "empirical": r.empirical_prob,
                    "stderr": r.stderr,
                    "ci_lo": r.ci95[0],
                    "ci_hi": r.ci95[1],
                    "bounds": {k: {"value": float(v), "vacuous": v.vacuous} for k, v in r.bounds.items()},
                }
                for r in self.rows
            ],
            "metadata": self.metadata,
        }


def _replicate(config, r, cache):
    seed_r = derive_seed(config.seed, r, 0)
    problem = config.problem
    try:
        if config.uses_analytic:
            rng = np.random.default_rng(seed_r)
            x = solve_trp_analytic(problem.source.sample_demands(rng, config.N))
        else:
            x = solve_saa(problem, draw_scenarios(problem.source, config.N, seed_r), cache).x
        if config.violation_mode == "exact-trp":
            return violation_exact_trp(np.clip(x, 0.0, 1.0))
        return violation_monte_carlo(problem, x, config.mc_samples, derive_seed(config.seed, r, 1), cache).estimate
    except SaaCertifyError as exc:
        raise ReplicationError(r, exc) from exc


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> ExperimentReport:
    """Run R replications and tabulate P^N(V(x*) > eps) with Wilson intervals.

    Replication r draws from a seed derived from (seed, r), so the result
    does not depend on the thread count or scheduling.
    """
    start = time.perf_counter()
    threads = thread_count() if threads is None else threads
    R = config.replications
    cache = RayCache()
    V = np.empty(R)
    if threads <= 1 or R < 2:
        for r in range(R):
            V[r] = _replicate(config, r, cache)
    else:
        chunks = np.array_split(np.arange(R), threads)

        def work(idx):
            return [(r, _replicate(config, int(r), cache)) for r in idx]

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(work, chunks):
                for r, v in part:
                    V[r] = v
    rows = []
    for eps in config.epsilons:
        k = int(np.count_nonzero(V > eps))
        p = k / R
        rows.append(
            ReportRow(
                epsilon=eps,
                empirical_prob=p,
                stderr=math.sqrt(p * (1 - p) / R),
                ci95=wilson_interval(k, R),
                bounds={b.label: b.evaluate(config.N, eps, config.problem) for b in config.bounds},
            )
        )
    meta = {"config": config.to_json(), "seed": config.seed, "runtime_seconds": time.perf_counter() - start}
    return ExperimentReport(rows=tuple(rows), replications=R, violations=V, metadata=meta)


def compare_bounds(report: ExperimentReport) -> list:
    """Per-eps table of each bound against the empirical probability.

    Tightness is bound / max(empirical, 1/R); vacuous bounds get no ratio.
    """
    if not report.bound_labels:
        raise InvalidInput("report has no bounds attached")
    floor = 1.0 / report.replications
    table = []
    for r in report.rows:
        entry = {"epsilon": r.epsilon, "empirical": r.empirical_prob, "stderr": r.stderr, "bounds": {}}
        for label, value in r.bounds.items():
            entry["bounds"][label] = {
                "value": float(value),
                "vacuous": value.vacuous,
                "tightness": None if value.vacuous else float(value) / max(r.empirical_prob, floor),
            }
        table.append(entry)
    return table


def dkw_halfwidth(R: int, alpha: float = 0.01) -> float:
    """Simultaneous (1 - alpha) band half-width for an empirical CDF of R draws."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * R))


# -- closed-form comparison for the resource-planning example ----------------


@dataclass(frozen=True)
class TailGridVerification:
    all_hold: bool
    worst_margin: float
    rows: tuple  # (n, N, epsilon, log_lhs, log_rhs, margin, holds)

    @property
    def cells(self):
        return len(self.rows)

    def to_json(self, include_rows=False):
        doc = {"all_hold": self.all_hold, "worst_margin": self.worst_margin, "cells": self.cells}
        if include_rows:
            doc["rows"] = [list(r) for r in self.rows]
        return doc


def default_tail_grid(n_max=20, N_max=1_000_000, N_points=30, eps_points=20, eps_lo=0.01, eps_hi=0.9):
    n_values = list(range(1, n_max + 1))
    N_values = sorted({int(round(v)) for v in np.geomspace(1, N_max, N_points)})
    eps_values = [float(e) for e in np.linspace(eps_lo, eps_hi, eps_points)]
    return n_values, N_values, eps_values


def verify_appendix(n_values: Sequence[int], N_values: Sequence[int], eps_values: Sequence[float]) -> TailGridVerification:
    """Check exact tail <= VC tail (at d = n) on every cell of the grid."""
    if not len(n_values) or not len(N_values) or not len(eps_values):
        raise InvalidInput("grid must be nonempty")
    rows = []
    for n in n_values:
        for N in N_values:
            for eps in eps_values:
                c = B.trp_inequality_check(int(n), int(N), float(eps))
                rows.append((int(n), int(N), float(eps), c.log_lhs, c.log_rhs, c.margin, c.holds))
    worst = min(r[5] for r in rows)
    return TailGridVerification(all(r[6] for r in rows), worst, tuple(rows))
