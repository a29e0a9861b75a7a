"""``saa-certify`` command line.

Exit codes: 0 success, 1 domain error, 2 usage/schema error, 3 when
``verify-appendix`` finds a cell where the inequality fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds as B
from . import vc
from .errors import SaaCertifyError, SchemaError
from .harness import (
    DEFAULT_SEED,
    ExperimentConfig,
    compare_bounds,
    default_tail_grid,
    fmt,
    run_experiment,
    verify_appendix,
)
from .polyhedral import enumerate_extreme_rays, matrix_from_json
from .saa import draw_scenarios, problem_from_json, solve_saa, trp_problem

EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_CHECK_FAILED = 3


class UsageError(Exception):
    def __init__(self, flag, message):
        super().__init__(f"{flag}: {message}")


def dumps(obj) -> str:
    """JSON with every float printed to 17 significant digits."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return fmt(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _load_json(flag, value):
    """Inline JSON if it looks like an object, otherwise a file path."""
    try:
        text = value if value.lstrip().startswith(("{", "[")) else Path(value).read_text()
        return json.loads(text)
    except OSError as exc:
        raise UsageError(flag, f"cannot read {value}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(flag, f"invalid JSON: {exc}") from None


def _schema(flag, fn, *args):
    try:
        return fn(*args)
    except SchemaError as exc:
        raise UsageError(flag, str(exc)) from None
    except (KeyError, TypeError) as exc:
        raise UsageError(flag, f"malformed document ({exc})") from None


# -- bound -------------------------------------------------------------------

# family -> (operation, [(argument name, flag attribute)])
_FAMILIES = {
    "vc-sample-complexity": (B.vc_sample_complexity, ["d", "eps", "delta"]),
    "vc-tail": (B.vc_tail, ["N", "d", "eps"]),
    "chain-binomial": (B.chain_binomial_tail, ["N", "m", "eps"]),
    "chain-chernoff": (B.chain_chernoff_tail, ["N", "m", "eps"]),
    "chain-sufficient-n": (B.chain_sufficient_N, ["m", "eps", "delta"]),
    "finite-sample-complexity": (B.finite_sample_complexity, ["cardinality", "eps", "delta"]),
    "finite-direct": (B.finite_direct_tail, ["count", "eta", "N"]),
    "gamma-tail-trp": (B.gamma_tail_trp, ["n", "N", "eps"]),
    "trp-check": (B.trp_inequality_check, ["n", "N", "eps"]),
    "two-stage-vc": (vc.two_stage_vc, ["n", "J"]),
    "mip-vc": (vc.mip_vc, ["n", "J", "zcard"]),
    "sparse-two-stage-vc": (vc.sparse_two_stage_vc, ["n", "n0", "J"]),
    "chain-order": (vc.chain_order_two_stage, ["q", "ray_counts"]),
    "ray-count-bound": (vc.extreme_ray_count_bound, ["m1", "n1"]),
}


def bound_result(family, args):
    op, names = _FAMILIES[family]
    values = []
    for name in names:
        v = getattr(args, name, None)
        if v is None and name == "N" and "n" not in names:
            v = args.n  # --n is accepted as the sample size where no dimension applies
        if v is None:
            raise UsageError(f"--{name.replace('_', '-')}", f"required for --family {family}")
        values.append(v)
    return op(*values)


def _bound_json(family, result):
    if isinstance(result, B.TrpCheck):
        return {
            "family": family,
            "lhs": result.lhs,
            "rhs_n": result.rhs_n,
            "log_lhs": result.log_lhs,
            "log_rhs": result.log_rhs,
            "holds": result.holds,
        }
    doc = {"family": family, "value": result}
    if isinstance(result, B.Tail):
        doc["value"] = float(result)
        doc["vacuous"] = result.vacuous
    return doc


def cmd_bound(args, out):
    result = bound_result(args.family, args)
    if args.format == "json":
        out.write(dumps(_bound_json(args.family, result)) + "\n")
    elif args.format == "csv":
        doc = _bound_json(args.family, result)
        out.write(",".join(doc) + "\n")
        out.write(",".join(fmt(v) if isinstance(v, float) else str(v) for v in doc.values()) + "\n")
    elif isinstance(result, B.TrpCheck):
        out.write(f"lhs {result.lhs!r}\nrhs_n {result.rhs_n!r}\nholds {str(result.holds).lower()}\n")
    else:
        suffix = " (vacuous)" if isinstance(result, B.Tail) and result.vacuous else ""
        value = float(result) if isinstance(result, B.Tail) else result
        out.write(f"{value!r}{suffix}\n")
    return 0


# -- other subcommands -------------------------------------------------------


def cmd_vcdim(args, out):
    expr = _schema("--expr", vc.expr_from_json, _load_json("--expr", args.expr))
    value = vc.eval_vc_upper(expr)
    if args.format == "json":
        out.write(dumps({"vc_upper": value}) + "\n")
    elif args.format == "csv":
        out.write(f"vc_upper\n{fmt(value)}\n")
    else:
        out.write(f"{value:g}\n" if value == int(value) else f"{value!r}\n")
    return 0


def cmd_rays(args, out):
    W = _schema("--matrix", matrix_from_json, _load_json("--matrix", args.matrix))
    rays = enumerate_extreme_rays(W, cap=args.cap)
    if args.format == "json":
        out.write(dumps(rays.to_json()) + "\n")
    elif args.format == "csv":
        out.write(",".join(f"a{i}" for i in range(rays.dim)) + "\n")
        for r in rays.rays:
            out.write(",".join(fmt(v) for v in r) + "\n")
    else:
        out.write(f"{len(rays)} extreme rays in R^{rays.dim}\n")
        for r in rays.rays:
            out.write(" ".join(f"{v:.10g}" for v in r) + "\n")
    return 0


def _problem_from_args(args):
    if args.trp is not None:
        return trp_problem(args.trp)
    if args.problem is None:
        raise UsageError("--problem", "one of --problem or --trp is required")
    return _schema("--problem", problem_from_json, _load_json("--problem", args.problem))


def cmd_solve_saa(args, out):
    problem = _problem_from_args(args)
    scenarios = draw_scenarios(problem.source, args.N, args.seed)
    sol = solve_saa(problem, scenarios)
    doc = sol.to_json()
    if args.format == "json":
        out.write(dumps(doc) + "\n")
    elif args.format == "csv":
        out.write("status,objective," + ",".join(f"x{i}" for i in range(len(sol.x))) + "\n")
        out.write(f"{sol.status},{fmt(sol.objective)}," + ",".join(fmt(v) for v in sol.x) + "\n")
    else:
        out.write(f"status {sol.status}\nobjective {sol.objective!r}\n")
        out.write("x " + " ".join(repr(float(v)) for v in sol.x) + "\n")
        out.write(f"sample_fingerprint {sol.sample_fingerprint}\n")
    return 0


def cmd_experiment(args, out):
    doc = _load_json("--config", args.config)
    if args.seed is not None:
        doc = dict(doc, seed=args.seed)
    config = _schema("--config", ExperimentConfig.from_json, doc)
    report = run_experiment(config)
    fmt_out = args.format
    if fmt_out is None:
        fmt_out = "json" if args.out and args.out.endswith(".json") else "csv"
    if fmt_out == "json":
        text = dumps(report.to_json()) + "\n"
    elif fmt_out == "csv":
        text = report.to_csv()
    else:
        lines = []
        for row in compare_bounds(report) if report.bound_labels else []:
            parts = [f"eps={row['epsilon']:.4g}", f"empirical={row['empirical']:.4g}"]
            for label, b in row["bounds"].items():
                flag = " vacuous" if b["vacuous"] else ""
                parts.append(f"{label}={b['value']:.4g}{flag}")
            lines.append("  ".join(parts))
        if not lines:
            lines = [f"eps={r.epsilon:.4g}  empirical={r.empirical_prob:.4g}" for r in report.rows]
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    return 0


def cmd_verify_appendix(args, out):
    grid = default_tail_grid(
        n_max=args.n_max,
        N_max=args.N_max,
        N_points=args.N_points,
        eps_points=args.eps_grid,
        eps_lo=args.eps_min,
        eps_hi=args.eps_max,
    )
    res = verify_appendix(*grid)
    if args.format == "json":
        out.write(dumps(res.to_json(include_rows=args.rows)) + "\n")
    elif args.format == "csv":
        out.write("n,N,epsilon,log_lhs,log_rhs,margin,holds\n")
        for r in res.rows:
            out.write(f"{r[0]},{r[1]},{fmt(r[2])},{fmt(r[3])},{fmt(r[4])},{fmt(r[5])},{str(r[6]).lower()}\n")
    else:
        out.write(f"all_hold {str(res.all_hold).lower()}\nworst_margin {res.worst_margin!r}\ncells {res.cells}\n")
    return 0 if res.all_hold else EXIT_CHECK_FAILED


# -- parser ------------------------------------------------------------------


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="saa-certify", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p, default="text"):
        p.add_argument("--format", choices=["text", "json", "csv"], default=default)

    p = sub.add_parser("bound", help="evaluate one bound or sample complexity")
    p.add_argument("--family", required=True, choices=sorted(_FAMILIES))
    p.add_argument("--N", type=int, help="sample size")
    p.add_argument("--n", type=int, help="decision dimension (sample size for families without one)")
    p.add_argument("--d", type=float, help="VC dimension bound")
    p.add_argument("--m", type=int, help="chain order")
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--cardinality", type=int)
    p.add_argument("--count", type=int, help="number of infeasible points")
    p.add_argument("--eta", type=float)
    p.add_argument("--J", type=int, help="total number of extreme rays")
    p.add_argument("--zcard", type=int)
    p.add_argument("--n0", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--ray-counts", dest="ray_counts", type=_int_list)
    p.add_argument("--m1", type=int)
    p.add_argument("--n1", type=int)
    add_format(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("vcdim", help="upper bound on the VC dimension of an expression")
    p.add_argument("--expr", required=True, help="JSON expression or path to one")
    add_format(p)
    p.set_defaults(func=cmd_vcdim)

    p = sub.add_parser("rays", help="extreme rays of {a : a^T W >= 0}")
    p.add_argument("--matrix", required=True, help="JSON matrix or path to one")
    p.add_argument("--cap", type=_positive_int, default=100_000)
    add_format(p, "json")
    p.set_defaults(func=cmd_rays)

    p = sub.add_parser("solve-saa", help="solve the SAA of a two-stage problem")
    p.add_argument("--problem", help="problem JSON or path to one")
    p.add_argument("--trp", type=_positive_int, metavar="n", help="use the n-dimensional resource-planning example")
    p.add_argument("--N", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    add_format(p, "json")
    p.set_defaults(func=cmd_solve_saa)

    p = sub.add_parser("experiment", help="run a replicated SAA experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output file; .json writes the JSON report, anything else CSV")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--format", choices=["text", "json", "csv"])
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify-appendix", help="check the resource-planning tail against the VC tail on a grid")
    p.add_argument("--n-max", dest="n_max", type=_positive_int, default=20)
    p.add_argument("--N-max", dest="N_max", type=_positive_int, default=1_000_000)
    p.add_argument("--N-points", dest="N_points", type=_positive_int, default=30)
    p.add_argument("--eps-grid", dest="eps_grid", type=_positive_int, default=20)
    p.add_argument("--eps-min", dest="eps_min", type=float, default=0.01)
    p.add_argument("--eps-max", dest="eps_max", type=float, default=0.9)
    p.add_argument("--rows", action="store_true", help="include every grid cell in JSON output")
    add_format(p)
    p.set_defaults(func=cmd_verify_appendix)
    return parser


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        err.write(f"saa-certify {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except SaaCertifyError as exc:
        err.write(f"saa-certify {args.command}: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
