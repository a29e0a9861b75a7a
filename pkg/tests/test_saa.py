import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from saa_certify import saa as S
from saa_certify.errors import DimensionError, InfeasibleSaaError, InvalidInput, SchemaError, UnboundedSaaError
from saa_certify.polyhedral import RayCache, lp_solve


def trp_scenarios(demands):
    gen = S.TrpGenerator(len(demands[0]), np.ones(len(demands[0])), np.ones(len(demands[0])))
    return [gen.scenario(np.asarray(d, dtype=float)) for d in demands]


def test_seed_derivation_is_stable():
    assert S.derive_seed(1, 2, 3) == S.derive_seed(1, 2, 3)
    assert S.derive_seed(1, 2, 0) != S.derive_seed(1, 2, 1)
    assert S.derive_seed(1, 2) != S.derive_seed(2, 1)
    assert 0 <= S.derive_seed(-5, 10**30) < 2**64


def test_draws_are_reproducible():
    gen = S.trp_problem(2).source
    a, b = S.draw_scenarios(gen, 3, 7), S.draw_scenarios(gen, 3, 7)
    assert S.sample_fingerprint(a) == S.sample_fingerprint(b)
    assert S.sample_fingerprint(a) != S.sample_fingerprint(S.draw_scenarios(gen, 3, 8))


def test_single_scenario_support_repeats():
    sc = trp_scenarios([[0.4]])[0]
    src = S.FiniteSupport([sc], [1.0])
    assert all(s is sc for s in S.draw_scenarios(src, 5, 0))


def test_trp_demand_mean():
    gen = S.trp_problem(3).source
    xi = gen.sample_demands(np.random.default_rng(0), 10**5)
    assert abs(xi.mean() - 0.5) < 0.005
    assert xi.min() >= 0 and xi.max() <= 1


def test_uniform_generator_ranges():
    gen = S.UniformEntryGenerator(2, 3, 2, {"h": (0.0, 0.5)})
    scen = S.draw_scenarios(gen, 50, 1)
    assert all(0 <= s.h.min() and s.h.max() <= 0.5 for s in scen)
    assert all(s.W.shape == (2, 3) and s.T.shape == (2, 2) for s in scen)
    with pytest.raises(SchemaError):
        S.UniformEntryGenerator(1, 1, 1, {"Q": (0, 1)})


def test_source_validation():
    sc = trp_scenarios([[0.4]])[0]
    with pytest.raises(InvalidInput):
        S.FiniteSupport([sc, sc], [0.5, 0.5 + 1e-9])
    with pytest.raises(InvalidInput):
        S.TrpGenerator(2, [1.0, 0.0], [1.0, 1.0])
    with pytest.raises(InvalidInput):
        S.TrpGenerator(2, [1.0, 1.0], [1.0, -1.0])
    with pytest.raises(DimensionError):
        S.Scenario(np.eye(2), np.eye(3), np.zeros(2), np.zeros(2))
    with pytest.raises(InvalidInput):
        S.draw_scenarios(S.trp_problem(1).source, 0, 1)
    with pytest.raises(InvalidInput):
        S.draw_scenarios("not a source", 3, 1)


def test_trp_two_samples(backend):
    problem = S.trp_problem(1)
    sol = S.solve_saa(problem, trp_scenarios([[0.3], [0.7]]))
    assert sol.x[0] == pytest.approx(0.7, abs=1e-9)
    assert sol.status == "optimal"


def test_decomposition_identity(backend):
    problem = S.trp_problem(3, c=[1.0, 2.0, 0.5], q=[0.3, 0.2, 0.9])
    scen = S.draw_scenarios(problem.source, 6, 11)
    sol = S.solve_saa(problem, scen)
    recourse = []
    for s in scen:
        out = lp_solve(s.q, s.W, s.h - s.T @ sol.x)
        assert out.status == "optimal"
        recourse.append(out.objective)
    expected = problem.c @ sol.x + np.mean(recourse)
    assert sol.objective == pytest.approx(expected, rel=1e-7)


def test_single_scenario_matches_merged_lp(backend):
    # min x + y  s.t.  y - x = -0.5 (y = x - 0.5), x <= 2, x, y >= 0
    sc = S.Scenario(W=[[1.0]], T=[[-1.0]], h=[-0.5], q=[1.0])
    problem = S.TwoStageProblem(n=1, c=[1.0], source=S.FiniteSupport([sc], [1.0]), A=[[1.0]], b=[2.0])
    sol = S.solve_saa(problem, [sc])
    merged = lp_solve([1.0, 1.0, 0.0], [[-1.0, 1.0, 0.0], [1.0, 0.0, 1.0]], [-0.5, 2.0])
    assert sol.x[0] == pytest.approx(merged.x[0], abs=1e-9)
    assert sol.objective == pytest.approx(merged.objective, abs=1e-9)


def test_deterministic_equivalent_blocks():
    problem = S.trp_problem(2)
    scen = trp_scenarios([[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]])
    de = S.build_deterministic_equivalent(problem, scen)
    assert len(de.y_cols) == 3 and len(de.scenario_rows) == 3
    for s, rows, cols in zip(scen, de.scenario_rows, de.y_cols):
        np.testing.assert_array_equal(de.A[rows, cols], s.W)
        np.testing.assert_array_equal(de.b[rows], s.h)
    with pytest.raises(InvalidInput):
        S.build_deterministic_equivalent(problem, [])


def test_unrestricted_first_stage_is_split(backend):
    sc = S.Scenario(W=[[1.0, -1.0]], T=[[1.0]], h=[0.0], q=[1.0, 1.0])
    problem = S.TwoStageProblem(n=1, c=[1.0], source=S.FiniteSupport([sc], [1.0]), A=[[-1.0]], b=[3.0], x_nonneg=False)
    de = S.build_deterministic_equivalent(problem, [sc])
    assert de.x_neg_cols is not None
    sol = S.solve_saa(problem, [sc])
    # total cost x + |x| vanishes on all of [-3, 0]
    assert sol.objective == pytest.approx(0.0, abs=1e-9)
    assert -3.0 - 1e-9 <= sol.x[0] <= 1e-9


def test_infeasible_saa_reports_blocking_scenario(backend):
    # scenario requires y = h - x with y >= 0 and x >= 1 from first stage
    ok = S.Scenario(W=[[1.0]], T=[[1.0]], h=[5.0], q=[1.0])
    bad = S.Scenario(W=[[1.0]], T=[[1.0]], h=[0.5], q=[1.0])
    problem = S.TwoStageProblem(n=1, c=[1.0], source=S.FiniteSupport([ok], [1.0]), A=[[-1.0]], b=[-1.0])
    with pytest.raises(InfeasibleSaaError) as info:
        S.solve_saa(problem, [ok, ok, bad, ok])
    assert info.value.scenario_index == 2


def test_unbounded_saa(backend):
    sc = S.Scenario(W=[[1.0, -1.0]], T=[[0.0]], h=[0.0], q=[-1.0, 0.0])
    problem = S.TwoStageProblem(n=1, c=[1.0], source=S.FiniteSupport([sc], [1.0]))
    with pytest.raises(UnboundedSaaError):
        S.solve_saa(problem, [sc])


def test_analytic_solver():
    np.testing.assert_array_equal(S.solve_trp_analytic([[0.2, 0.9], [0.5, 0.1]]), [0.5, 0.9])
    np.testing.assert_array_equal(S.solve_trp_analytic([[0.3, 0.4]]), [0.3, 0.4])
    with pytest.raises(InvalidInput):
        S.solve_trp_analytic([])
    with pytest.raises(InvalidInput):
        S.solve_trp_analytic([[1.5]])


@given(st.lists(st.lists(st.floats(0, 1), min_size=2, max_size=2), min_size=1, max_size=8), st.lists(st.floats(0, 1), min_size=2, max_size=2))
def test_analytic_monotone_in_samples(samples, extra):
    before = S.solve_trp_analytic(samples)
    after = S.solve_trp_analytic(samples + [extra])
    assert np.all(after >= before)


def test_exact_violation():
    assert S.violation_exact_trp([1.0, 1.0]) == 0.0
    assert S.violation_exact_trp([0.5, 0.5]) == 0.75
    with pytest.raises(InvalidInput):
        S.violation_exact_trp([1.2])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_exact_violation_range(x):
    v = S.violation_exact_trp(x)
    assert 0.0 <= v <= 1.0
    assert (v == 0.0) == all(xi == 1.0 for xi in x)


def test_monte_carlo_trp():
    problem = S.trp_problem(2)
    est = S.violation_monte_carlo(problem, [0.5, 0.5], 10**5, 3)
    assert abs(est.estimate - 0.75) < 0.004
    assert abs(est.estimate - 0.75) < 3 * est.stderr
    assert est.ci95[0] < est.estimate < est.ci95[1]
    assert S.violation_monte_carlo(problem, [1.0, 1.0], 1000, 3).estimate == 0.0


def test_monte_carlo_generic_path_matches_vectorised():
    # same TRP instance, expressed as a finite support over drawn scenarios
    gen = S.trp_problem(2).source
    scen = S.draw_scenarios(gen, 200, 5)
    finite = S.TwoStageProblem(n=2, c=[1.0, 1.0], source=S.FiniteSupport(scen, [1 / 200] * 200))
    x = np.array([0.6, 0.7])
    direct = np.mean([not S.recourse_feasible(s, x) for s in scen])
    est = S.violation_monte_carlo(finite, x, 4000, 9, RayCache())
    assert abs(est.estimate - direct) < 4 * np.sqrt(direct * (1 - direct) / 4000)


def test_monte_carlo_all_feasible_finite():
    sc = S.Scenario(W=[[1.0]], T=[[1.0]], h=[5.0], q=[1.0])
    problem = S.TwoStageProblem(n=1, c=[1.0], source=S.FiniteSupport([sc], [1.0]))
    assert S.violation_monte_carlo(problem, [1.0], 50, 0).estimate == 0.0
    with pytest.raises(InvalidInput):
        S.violation_monte_carlo(problem, [1.0], 0, 0)
    with pytest.raises(DimensionError):
        S.violation_monte_carlo(problem, [1.0, 2.0], 5, 0)


def test_recourse_feasible_without_pointed_w():
    sc = S.Scenario(W=[[1.0, 0.0], [2.0, 0.0]], T=[[1.0], [2.0]], h=[1.0, 2.0], q=[1.0, 1.0])
    assert S.recourse_feasible(sc, np.array([0.5]))
    assert not S.recourse_feasible(sc, np.array([1.5]))


def test_wilson_interval():
    lo, hi = S.wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-15) and 0 < hi < 0.05
    lo, hi = S.wilson_interval(50, 100)
    assert lo < 0.5 < hi


def test_problem_json_roundtrip():
    sc = S.Scenario(W=[[1.0]], T=[[1.0]], h=[5.0], q=[1.0])
    problems = [
        S.trp_problem(3, q=[1.0, 2.0, 3.0]),
        S.TwoStageProblem(n=1, c=[1.0], source=S.FiniteSupport([sc], [1.0]), A=[[1.0]], b=[2.0]),
        S.TwoStageProblem(n=2, c=[1.0, 0.0], source=S.UniformEntryGenerator(2, 3, 2)),
    ]
    for p in problems:
        doc = S.problem_to_json(p)
        assert S.problem_to_json(S.problem_from_json(doc)) == doc
    with pytest.raises(SchemaError):
        S.problem_from_json({"n": 1, "c": [1.0], "source": {"kind": "trp"}, "color": "red"})
    with pytest.raises(SchemaError):
        S.problem_from_json({"n": 1, "c": [1.0], "source": {"kind": "gaussian"}})
