import io
import json

import pytest

from saa_certify import bounds as B
from saa_certify.cli import dumps, main
from saa_certify.harness import fmt, verify_appendix
from saa_certify.vc import FiniteClass, eval_vc_upper


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_bound_vc_tail():
    code, out, _ = run("bound", "--family", "vc-tail", "--n", "400", "--d", "1", "--eps", "0.1")
    assert code == 0
    assert float(out.split()[0]) == float(B.vc_tail(400, 1, 0.1))


def test_bound_chain_sufficient():
    code, out, _ = run("bound", "--family", "chain-sufficient-n", "--m", "1", "--eps", "0.1", "--delta", "0.05")
    assert code == 0 and out.strip() == "48"


def test_bound_json_is_exact():
    code, out, _ = run("bound", "--family", "gamma-tail-trp", "--n", "3", "--N", "25", "--eps", "0.1", "--format", "json")
    assert code == 0
    assert json.loads(out)["value"] == B.gamma_tail_trp(3, 25, 0.1)


def test_bound_vacuous_flag():
    _, out, _ = run("bound", "--family", "vc-tail", "--N", "1", "--d", "5", "--eps", "0.1")
    assert out.strip().endswith("(vacuous)")


def test_bound_missing_flag_is_usage_error():
    code, _, err = run("bound", "--family", "vc-tail", "--d", "1", "--eps", "0.1")
    assert code == 2 and "--N" in err


def test_bound_domain_error():
    code, _, err = run("bound", "--family", "vc-tail", "--N", "10", "--d", "1", "--eps", "1.5")
    assert code == 1 and "epsilon" in err


def test_vcdim_inline():
    code, out, _ = run("vcdim", "--expr", '{"op":"finite","cardinality":8}')
    assert code == 0 and out.strip() == "3"
    _, out, _ = run("vcdim", "--expr", '{"op":"finite","cardinality":8}', "--format", "json")
    assert json.loads(out)["vc_upper"] == eval_vc_upper(FiniteClass(8))


def test_vcdim_rejects_unknown_field():
    code, _, err = run("vcdim", "--expr", '{"op":"finite","cardinality":8,"x":1}')
    assert code == 2 and "--expr" in err


def test_vcdim_from_file(tmp_path):
    path = tmp_path / "expr.json"
    path.write_text(json.dumps({"op": "intersect", "children": [{"op": "atom", "d": 1}, {"op": "atom", "d": 1}]}))
    code, out, _ = run("vcdim", "--expr", str(path))
    assert code == 0 and float(out) == pytest.approx(9.401565484092328, rel=1e-14)


def test_missing_file_is_usage_error(tmp_path):
    code, _, err = run("vcdim", "--expr", str(tmp_path / "nope.json"))
    assert code == 2


def test_rays(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"rows": 2, "cols": 4, "data": [1, 0, 1, 0, 0, 1, 0, 1]}))
    code, out, _ = run("rays", "--matrix", str(path))
    assert code == 0
    doc = json.loads(out)
    assert len(doc["rays"]) == 2


def test_rays_not_pointed_is_domain_error():
    code, _, _ = run("rays", "--matrix", '{"rows":2,"cols":1,"data":[1,2]}')
    assert code == 1


def test_solve_saa_trp_and_default_seed():
    a = run("solve-saa", "--trp", "2", "--N", "5")
    b = run("solve-saa", "--trp", "2", "--N", "5")
    assert a == b and a[0] == 0
    doc = json.loads(a[1])
    assert doc["status"] == "optimal" and len(doc["x"]) == 2


def test_solve_saa_problem_file(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"schema_version": 1, "n": 1, "c": [1.0], "source": {"kind": "trp", "q": [1.0]}}))
    code, out, _ = run("solve-saa", "--problem", str(path), "--N", "50", "--seed", "7")
    assert code == 0
    assert 0.9 < json.loads(out)["x"][0] <= 1.0


def test_solve_saa_needs_problem():
    code, _, err = run("solve-saa", "--N", "5")
    assert code == 2 and "--problem" in err


def test_experiment_csv(tmp_path):
    cfg = {
        "schema_version": 1,
        "problem": {"n": 1, "c": [1.0], "source": {"kind": "trp"}},
        "N": 3,
        "epsilons": [0.2, 0.5],
        "replications": 40,
        "bounds": [{"family": "gamma-tail-trp", "n": 1, "label": "exact"}],
    }
    cfg_path, out_path = tmp_path / "cfg.json", tmp_path / "report.csv"
    cfg_path.write_text(json.dumps(cfg))
    code, _, _ = run("experiment", "--config", str(cfg_path), "--out", str(out_path))
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0] == "epsilon,empirical,ci_lo,ci_hi,exact"
    assert len(lines) == 3
    assert lines[1].split(",")[4] == fmt(B.gamma_tail_trp(1, 3, 0.2))
    code, _, _ = run("experiment", "--config", str(cfg_path), "--out", str(tmp_path / "r.json"))
    assert json.loads((tmp_path / "r.json").read_text())["schema_version"] == 1


def test_experiment_bad_config():
    code, _, err = run("experiment", "--config", '{"N": 3}')
    assert code == 2


def test_verify_small_grid():
    code, out, _ = run("verify-appendix", "--n-max", "3", "--N-max", "1000", "--N-points", "5", "--eps-grid", "4", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["all_hold"] is True and doc["cells"] == 3 * 5 * 4


def test_verify_default_grid():
    code, out, _ = run("verify-appendix")
    assert code == 0
    assert out.startswith("all_hold true")


def test_dumps_round_trips_floats():
    x = 0.1 + 0.2
    assert json.loads(dumps({"v": x}))["v"] == x
    assert dumps({"a": [1, True, None]}) == '{"a": [1, true, null]}'


def test_verify_output_matches_module():
    _, out, _ = run("verify-appendix", "--n-max", "2", "--N-max", "10", "--N-points", "3", "--eps-grid", "3", "--format", "json")
    from saa_certify.harness import default_tail_grid

    ref = verify_appendix(*default_tail_grid(n_max=2, N_max=10, N_points=3, eps_points=3))
    assert json.loads(out)["worst_margin"] == ref.worst_margin
