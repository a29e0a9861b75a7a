"""Sample-complexity and tail bounds on P^N(V(x*) > eps), evaluated in log space.

Logarithms are natural unless written ``log2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInput

LN2 = math.log(2.0)
_E_FACTOR = math.e / (math.e - 1.0)
_EXACT_BINOMIAL_MAX_N = 60
_MAX_EXP = 709.0


class Tail(float):
    """A tail-probability bound that remembers whether it is vacuous.

    Bounds above 1 are kept as-is rather than clamped, so comparison tables
    can show how far from informative they are.
    """

    vacuous: bool

    def __new__(cls, value, vacuous=None):
        obj = super().__new__(cls, value)
        obj.vacuous = bool(value > 1.0) if vacuous is None else bool(vacuous)
        return obj

    def __repr__(self):
        flag = ", vacuous" if self.vacuous else ""
        return f"Tail({float(self)!r}{flag})"


def _check_unit(name, value, closed_right=False):
    ok = 0.0 < value <= 1.0 if closed_right else 0.0 < value < 1.0
    if not ok:
        interval = "(0, 1]" if closed_right else "(0, 1)"
        raise InvalidInput(f"{name} must lie in {interval}, got {value!r}")


def _check_count(name, value, minimum=1):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise InvalidInput(f"{name} must be an integer >= {minimum}, got {value!r}")


def _exp(log_value):
    return math.inf if log_value > _MAX_EXP else math.exp(log_value)


def _logsumexp(logs):
    logs = [v for v in logs if v != -math.inf]
    if not logs:
        return -math.inf
    top = max(logs)
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k); exact integer arithmetic for small n, log-gamma otherwise."""
    if n <= _EXACT_BINOMIAL_MAX_N:
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


# -- VC (PAC) family ---------------------------------------------------------


def vc_sample_complexity(d: float, epsilon: float, delta: float) -> int:
    """Smallest N with N >= (4/eps) (d ln(12/eps) + ln(2/delta))."""
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    if d < 0:
        raise InvalidInput(f"d must be nonnegative, got {d!r}")
    return math.ceil(vc_sample_requirement(d, epsilon, delta))


def vc_sample_requirement(d: float, epsilon: float, delta: float) -> float:
    """Right-hand side of the VC sample-size condition, before rounding."""
    return (4.0 / epsilon) * (d * math.log(12.0 / epsilon) + math.log(2.0 / delta))


def log_vc_tail(N: int, d: float, epsilon: float) -> float:
    return LN2 - N * epsilon / 4.0 + d * math.log(12.0 / epsilon)


def vc_tail(N: int, d: float, epsilon: float) -> Tail:
    """2 exp(-N eps / 4) (12/eps)^d, an upper bound on P^N(V(x*) > eps)."""
    _check_count("N", N)
    _check_unit("epsilon", epsilon)
    if d < 0:
        raise InvalidInput(f"d must be nonnegative, got {d!r}")
    return Tail(_exp(log_vc_tail(N, d, epsilon)))


# -- chain-constrained family ------------------------------------------------


def chain_binomial_tail(N: int, m: int, epsilon: float) -> Tail:
    """P(Binomial(N, eps) <= m - 1), the chain-constrained bound of order m."""
    _check_count("N", N)
    _check_count("m", m)
    _check_unit("epsilon", epsilon)
    if m > N:
        return Tail(1.0)
    le, l1e = math.log(epsilon), math.log1p(-epsilon)
    logs = [log_binomial(N, k) + k * le + (N - k) * l1e for k in range(m)]
    return Tail(min(_exp(_logsumexp(logs)), 1.0))


def chain_chernoff_tail(N: int, m: int, epsilon: float) -> Tail:
    """exp(-(N eps - m + 1)^2 / (2 N eps)), valid when N eps >= m - 1.

    Outside that region the expression is not a bound; 1 is returned and
    flagged vacuous.
    """
    _check_count("N", N)
    _check_count("m", m)
    _check_unit("epsilon", epsilon)
    mu = N * epsilon
    if mu < m - 1:
        return Tail(1.0, vacuous=True)
    return Tail(math.exp(-((mu - m + 1) ** 2) / (2.0 * mu)))


def chain_sufficient_N(m: int, epsilon: float, delta: float) -> int:
    """Smallest N with N >= e/(e-1) (1/eps) (m - 1 + ln(1/delta))."""
    _check_count("m", m)
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    return math.ceil(chain_sufficient_requirement(m, epsilon, delta))


def chain_sufficient_requirement(m: int, epsilon: float, delta: float) -> float:
    return _E_FACTOR / epsilon * (m - 1 + math.log(1.0 / delta))


# -- finite feasible region --------------------------------------------------


def finite_sample_complexity(cardinality: int, epsilon: float, delta: float) -> int:
    """VC sample complexity with d = log2(|X| + 1)."""
    _check_count("cardinality", cardinality)
    return vc_sample_complexity(math.log2(cardinality + 1), epsilon, delta)


def finite_sample_requirement(cardinality: int, epsilon: float, delta: float) -> float:
    return vc_sample_requirement(math.log2(cardinality + 1), epsilon, delta)


def finite_direct_tail(infeasible_count: int, eta: float, N: int) -> Tail:
    """Union bound |X_infeasible| (1 - eta)^N on P^N(V(x*) > eta).

    ``eta`` is the smallest violation probability among infeasible points, so
    the bound is stated at level eta (and holds for every larger level).
    """
    _check_count("infeasible_count", infeasible_count, minimum=0)
    _check_unit("eta", eta, closed_right=True)
    _check_count("N", N)
    if infeasible_count == 0 or eta == 1.0:
        return Tail(0.0)
    return Tail(_exp(math.log(infeasible_count) + N * math.log1p(-eta)))


# -- the resource-planning example ------------------------------------------


def log_gamma_tail_trp(n: int, N: int, epsilon: float) -> float:
    """ln of sum_{i<n} x^i/i! e^{-x} with x = N ln(1/(1 - eps))."""
    _check_count("n", n)
    _check_count("N", N)
    _check_unit("epsilon", epsilon)
    x = -N * math.log1p(-epsilon)
    return _log_poisson_cdf(n - 1, x)


def _log_poisson_cdf(k: int, x: float) -> float:
    # terms t_i = x^i e^{-x} / i!, built by the recurrence ln t_i = ln t_{i-1} + ln x - ln i
    lx = math.log(x)
    logs = [-x]
    for i in range(1, k + 1):
        logs.append(logs[-1] + lx - math.log(i))
    return _logsumexp(logs)


def gamma_tail_trp(n: int, N: int, epsilon: float) -> float:
    """Exact P^N(V(x*) > eps) for the n-dimensional resource-planning example."""
    value = math.exp(log_gamma_tail_trp(n, N, epsilon))
    assert value <= 1.0 + 1e-12, value
    return min(value, 1.0)


@dataclass(frozen=True)
class TrpCheck:
    lhs: float
    rhs_n: float
    log_lhs: float
    log_rhs: float
    holds: bool

    @property
    def margin(self) -> float:
        """ln(rhs) - ln(lhs); positive when the inequality holds strictly."""
        return self.log_rhs - self.log_lhs


def trp_inequality_check(n: int, N: int, epsilon: float) -> TrpCheck:
    """Compare the exact example tail with the VC tail at d = n.

    Any valid VC bound for the example is at least n, and the VC tail grows
    with d, so holding at d = n is the strongest form of the comparison.
    """
    log_lhs = log_gamma_tail_trp(n, N, epsilon)
    log_rhs = log_vc_tail(N, n, epsilon)
    return TrpCheck(
        lhs=math.exp(log_lhs),
        rhs_n=_exp(log_rhs),
        log_lhs=log_lhs,
        log_rhs=log_rhs,
        holds=log_lhs <= log_rhs,
    )
