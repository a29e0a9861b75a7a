import csv
import io
import math

import numpy as np
import pytest

from saa_certify import bounds as B
from saa_certify.errors import InvalidInput, SchemaError
from saa_certify.harness import (
    BoundRequest,
    ExperimentConfig,
    ReplicationError,
    compare_bounds,
    default_tail_grid,
    dkw_halfwidth,
    run_experiment,
    thread_count,
    verify_appendix,
)
from saa_certify.saa import FiniteSupport, Scenario, TwoStageProblem, trp_problem


def trp_config(n=1, N=1, eps=(0.2, 0.5, 0.8), R=200, **kw):
    return ExperimentConfig(problem=trp_problem(n), N=N, epsilons=eps, replications=R, **kw)


def test_one_sample_violation_is_uniform():
    rep = run_experiment(trp_config(R=10_000))
    for row in rep.rows:
        lo, hi = row.ci95
        assert lo <= 1 - row.epsilon <= hi


def test_single_replication_is_zero_or_one():
    rep = run_experiment(trp_config(R=1))
    assert all(row.empirical_prob in (0.0, 1.0) for row in rep.rows)


def test_empirical_is_monotone_in_epsilon():
    eps = tuple(np.linspace(0.05, 0.95, 19))
    rep = run_experiment(trp_config(n=3, N=10, eps=eps, R=500))
    probs = [r.empirical_prob for r in rep.rows]
    assert all(a >= b for a, b in zip(probs, probs[1:]))


def test_determinism_across_threads():
    cfg = trp_config(n=2, N=5, R=300)
    a = run_experiment(cfg, threads=1)
    b = run_experiment(cfg, threads=4)
    np.testing.assert_array_equal(a.violations, b.violations)
    assert a.to_csv() == b.to_csv()


def test_simplex_solver_path():
    rep = run_experiment(trp_config(n=2, N=4, R=20, solver="simplex"))
    assert np.all((0 <= rep.violations) & (rep.violations <= 1))


def test_monte_carlo_mode():
    sc_ok = Scenario(W=[[1.0]], T=[[1.0]], h=[5.0], q=[0.0])
    sc_tight = Scenario(W=[[1.0]], T=[[1.0]], h=[0.0], q=[0.0])
    problem = TwoStageProblem(n=1, c=[1.0], source=FiniteSupport([sc_ok, sc_tight], [0.5, 0.5]))
    cfg = ExperimentConfig(problem, N=3, epsilons=(0.1,), replications=20, violation_mode="monte-carlo", mc_samples=100)
    rep = run_experiment(cfg)
    # free recourse makes x* = 0 the unique optimum, feasible for every scenario
    assert rep.rows[0].empirical_prob == 0.0


def test_replication_errors_carry_index():
    bad = Scenario(W=[[1.0]], T=[[1.0]], h=[-1.0], q=[1.0])
    problem = TwoStageProblem(n=1, c=[1.0], source=FiniteSupport([bad], [1.0]))
    cfg = ExperimentConfig(problem, N=2, epsilons=(0.1,), replications=3, violation_mode="monte-carlo", mc_samples=5)
    with pytest.raises(ReplicationError) as info:
        run_experiment(cfg)
    assert info.value.replication == 0


def test_gamma_band_at_large_R():
    eps = tuple(np.linspace(0.02, 0.98, 25))
    n, N, R = 2, 6, 20_000
    rep = run_experiment(trp_config(n=n, N=N, eps=eps, R=R))
    band = dkw_halfwidth(R, alpha=0.01)
    worst = max(abs(r.empirical_prob - B.gamma_tail_trp(n, N, r.epsilon)) for r in rep.rows)
    assert worst <= band


def test_compare_bounds_table():
    bounds = (
        BoundRequest("vc-tail", {"two_stage": {"n": 2, "J": 2}}, "vc"),
        BoundRequest("gamma-tail-trp", {"n": 2}, "exact"),
    )
    rep = run_experiment(trp_config(n=2, N=200, eps=(0.05, 0.1, 0.3), R=300, bounds=bounds))
    table = compare_bounds(rep)
    assert len(table) == 3
    for row in table:
        vc, exact = row["bounds"]["vc"], row["bounds"]["exact"]
        assert exact["value"] <= vc["value"]
        if vc["vacuous"]:
            assert vc["tightness"] is None
        else:
            assert vc["tightness"] == pytest.approx(vc["value"] / max(row["empirical"], 1 / 300))


def test_compare_bounds_requires_bounds():
    with pytest.raises(InvalidInput):
        compare_bounds(run_experiment(trp_config(R=2)))


def test_finite_direct_below_eta_is_vacuous():
    b = BoundRequest("finite-direct", {"infeasible_count": 3, "eta": 0.2})
    assert b.evaluate(10, 0.1).vacuous
    assert b.evaluate(10, 0.3) == pytest.approx(3 * 0.8**10)


def test_csv_layout():
    bounds = (BoundRequest("chain-binomial", {"m": 2}, "chain"),)
    rep = run_experiment(trp_config(N=5, R=50, bounds=bounds))
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["epsilon", "empirical", "ci_lo", "ci_hi", "chain"]
    assert len(rows) == 4
    # 17 significant digits round-trip exactly
    assert float(rows[1][0]) == rep.rows[0].epsilon
    assert float(rows[1][4]) == float(rep.rows[0].bounds["chain"])


def test_config_json_roundtrip():
    cfg = trp_config(n=2, N=7, bounds=(BoundRequest("vc-tail", {"d": 3}),), seed=99)
    doc = cfg.to_json()
    assert ExperimentConfig.from_json(doc).to_json() == doc
    with pytest.raises(SchemaError):
        ExperimentConfig.from_json(dict(doc, extra=1))
    with pytest.raises(SchemaError):
        BoundRequest.from_json({"family": "vc-tail", "d": 1, "bogus": 2})


@pytest.mark.parametrize(
    "kw",
    [
        dict(epsilons=(0.5, 0.2)),
        dict(epsilons=()),
        dict(epsilons=(1.0,)),
        dict(replications=0),
        dict(violation_mode="monte-carlo"),
        dict(solver="magic"),
    ],
)
def test_config_validation(kw):
    base = dict(problem=trp_problem(1), N=3, epsilons=(0.5,), replications=3)
    base.update(kw)
    with pytest.raises(InvalidInput):
        ExperimentConfig(**base)


def test_thread_env(monkeypatch):
    monkeypatch.setenv("SAA_CERTIFY_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("SAA_CERTIFY_THREADS", "zero")
    with pytest.raises(InvalidInput):
        thread_count()
    monkeypatch.delenv("SAA_CERTIFY_THREADS")
    assert thread_count() == 1


def test_verify_single_cells():
    res = verify_appendix([1], [10], [0.1])
    assert res.all_hold and res.cells == 1
    assert res.worst_margin == pytest.approx(math.log(186.91218793713717 / 0.9**10), rel=1e-12)
    assert verify_appendix([1], [1], [0.9]).all_hold


def test_default_grid_shape():
    n, N, eps = default_tail_grid()
    assert n == list(range(1, 21))
    assert N[0] == 1 and N[-1] == 10**6 and len(N) == 30
    assert len(eps) == 20 and eps[0] == 0.01 and eps[-1] == pytest.approx(0.9)
