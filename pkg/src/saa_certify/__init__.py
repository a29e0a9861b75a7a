"""Feasibility certificates for sample average approximation (SAA) of two-stage
stochastic programs without relatively complete recourse."""

from .bounds import (
    Tail,
    chain_binomial_tail,
    chain_chernoff_tail,
    chain_sufficient_N,
    finite_direct_tail,
    finite_sample_complexity,
    gamma_tail_trp,
    trp_inequality_check,
    vc_sample_complexity,
    vc_tail,
)
from .harness import ExperimentConfig, BoundRequest, compare_bounds, run_experiment, verify_appendix
from .polyhedral import (
    RaySet,
    cone_membership,
    enumerate_extreme_rays,
    farkas_in_domain,
    lp_feasible_nonneg,
    lp_solve,
    pointedness_check,
)
from .saa import (
    TwoStageProblem,
    draw_scenarios,
    solve_saa,
    solve_trp_analytic,
    trp_problem,
    violation_exact_trp,
    violation_monte_carlo,
)
from .vc import empirical_vc, eval_vc_upper, mip_vc, sparse_two_stage_vc, two_stage_vc

__version__ = "0.1.0"
