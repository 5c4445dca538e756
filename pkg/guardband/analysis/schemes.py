""" Call admission control policies and their blocking / dropping performance """

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from guardband.analysis.birth_death import (
    DENSE_ORACLE_MAX_C,
    BirthRateProfile,
    StationaryDistribution,
    stationary_distribution,
)
from guardband.analysis.traffic import derive_rates, handoff_balance_rhs
from guardband.helper_functions import (
    ConvergenceError,
    ParameterDomainError,
    UnsupportedSizeError,
    check_probability,
    check_rate,
)

FP_DAMPING = 0.5
FP_TOLERANCE = 1e-10
FP_MAX_ITERATIONS = 10_000
ALPHA_TIE_TOLERANCE = 1e-15

# ============================================================================ #
#                              ADMISSION POLICIES
# ============================================================================ #


class PolicyKind(Enum):
    NON_PRIORITY = "non-priority"
    NEW_CALL_BOUNDING = "new-call-bounding"
    ACCEPTANCE_GUARD = "acceptance-guard"


@dataclass(frozen=True)
class AdmissionPolicy:
    """
    New-call admission rule over C channels. Handoff calls are always admitted
    while a channel is free.

    * non-priority: new calls admitted whenever i < C
    * new-call-bounding: new calls admitted while i < m, the C - m channels above are guard channels
    * acceptance-guard: admitted while i < m, admitted with probability alpha while m <= i < n, refused from n on
    """

    c: int
    kind: PolicyKind
    m: Optional[int] = None
    n: Optional[int] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        if int(self.c) != self.c or self.c < 1:
            raise ParameterDomainError(f"channel count must be a positive integer, got {self.c}")
        kind = PolicyKind(self.kind)
        object.__setattr__(self, "kind", kind)

        if kind is PolicyKind.NON_PRIORITY:
            if self.m is not None or self.n is not None or self.alpha is not None:
                raise ParameterDomainError("non-priority policy takes no thresholds")
        elif kind is PolicyKind.NEW_CALL_BOUNDING:
            if self.n is not None or self.alpha is not None:
                raise ParameterDomainError("new-call-bounding policy takes only m")
            if self.m is None or int(self.m) != self.m or not 0 <= self.m <= self.c:
                raise ParameterDomainError(f"m must be an integer in [0, {self.c}], got {self.m}")
        else:
            for name in ("m", "n"):
                value = getattr(self, name)
                if value is None or int(value) != value:
                    raise ParameterDomainError(f"{name} must be an integer, got {value}")
            if not 0 <= self.m <= self.n <= self.c:
                raise ParameterDomainError(f"need 0 <= m <= n <= C, got m={self.m}, n={self.n}, C={self.c}")
            object.__setattr__(self, "alpha", check_probability(self.alpha, "alpha"))

    @classmethod
    def non_priority(cls, c):
        return cls(c=c, kind=PolicyKind.NON_PRIORITY)

    @classmethod
    def new_call_bounding(cls, c, m):
        return cls(c=c, kind=PolicyKind.NEW_CALL_BOUNDING, m=m)

    @classmethod
    def acceptance_guard(cls, c, m, n, alpha):
        return cls(c=c, kind=PolicyKind.ACCEPTANCE_GUARD, m=m, n=n, alpha=alpha)

    @property
    def guard_channels(self):
        """channels reserved for handoff calls only (C - m for new-call bounding)"""
        if self.kind is PolicyKind.NON_PRIORITY:
            return 0
        if self.kind is PolicyKind.NEW_CALL_BOUNDING:
            return self.c - self.m
        return self.c - self.n

    @property
    def label(self):
        """policy name without alpha, e.g. 'acceptance-guard[m=100,n=110]'"""
        if self.kind is PolicyKind.NON_PRIORITY:
            return f"{self.kind.value}[c={self.c}]"
        if self.kind is PolicyKind.NEW_CALL_BOUNDING:
            return f"{self.kind.value}[m={self.m}]"
        return f"{self.kind.value}[m={self.m},n={self.n}]"

    def with_alpha(self, alpha):
        if self.kind is not PolicyKind.ACCEPTANCE_GUARD:
            raise ParameterDomainError(f"{self.kind.value} has no acceptance factor")
        return replace(self, alpha=alpha)


def admission_vector(policy):
    """
    New-call admission probability for every state 0..C

    :param policy: admission policy
    :type policy: AdmissionPolicy
    :return: array a(0..C)
    :rtype: numpy.ndarray
    """
    a = np.zeros(policy.c + 1)
    if policy.kind is PolicyKind.NON_PRIORITY:
        a[: policy.c] = 1.0
    elif policy.kind is PolicyKind.NEW_CALL_BOUNDING:
        a[: policy.m] = 1.0
    else:
        a[: policy.m] = 1.0
        a[policy.m : policy.n] = policy.alpha
    return a


def admission_probability(policy, i):
    """
    Probability that a new call arriving in state i is admitted

    :param policy: admission policy
    :type policy: AdmissionPolicy
    :param i: number of busy channels
    :type i: int
    :raises IndexError: if i is outside 0..C
    :return: admission probability
    :rtype: float
    """
    if not 0 <= i <= policy.c:
        raise IndexError(f"state {i} outside 0..{policy.c}")
    if policy.kind is PolicyKind.NON_PRIORITY:
        return 1.0 if i < policy.c else 0.0
    if policy.kind is PolicyKind.NEW_CALL_BOUNDING:
        return 1.0 if i < policy.m else 0.0
    if i < policy.m:
        return 1.0
    if i < policy.n:
        return policy.alpha
    return 0.0


def birth_profile(policy, lambda_n, lambda_h):
    """
    Birth rates b(i) = lambda_n a(i) + lambda_h for i < C

    :param policy: admission policy
    :type policy: AdmissionPolicy
    :param lambda_n: new-call arrival rate
    :type lambda_n: float
    :param lambda_h: handoff arrival rate
    :type lambda_h: float
    :return: birth rate profile
    :rtype: BirthRateProfile
    """
    lambda_n = check_rate(lambda_n, "lambda_n", allow_zero=True)
    lambda_h = check_rate(lambda_h, "lambda_h", allow_zero=True)
    a = admission_vector(policy)[: policy.c]
    return BirthRateProfile(c=policy.c, rates=lambda_n * a + lambda_h)


# ============================================================================ #
#                               PERFORMANCE
# ============================================================================ #


@dataclass(frozen=True)
class PerformanceMetrics:
    """
    Blocking and dropping performance of a policy at one operating point

    :param p_block: new-call blocking probability
    :param p_drop: handoff dropping probability
    :param lambda_h: handoff arrival rate used (given or flow-balanced)
    :param fp_iterations: flow-balance map evaluations, 0 when lambda_h was given
    :param fp_residual: absolute flow-balance residual, 0 when lambda_h was given
    :param carried_load: mean number of busy channels
    :param utilization: carried_load / C
    :param new_throughput: admitted new calls per second
    :param handoff_throughput: admitted handoff calls per second
    """

    p_block: float
    p_drop: float
    lambda_h: float
    fp_iterations: int = 0
    fp_residual: float = 0.0
    carried_load: float = 0.0
    utilization: float = 0.0
    new_throughput: float = 0.0
    handoff_throughput: float = 0.0


def metrics_from_distribution(policy, dist, lambda_n, lambda_h):
    """
    Blocking and dropping seen by Poisson arrivals (PASTA)

    p_block = sum_i P(i) (1 - a(i)), p_drop = P(C)

    :param policy: admission policy
    :type policy: AdmissionPolicy
    :param dist: stationary distribution of the policy's chain
    :type dist: StationaryDistribution
    :return: performance metrics
    :rtype: PerformanceMetrics
    """
    refused = 1.0 - admission_vector(policy)
    p_block = min(1.0, float(np.dot(dist.probs, refused)))
    p_drop = float(dist.probs[-1])
    carried = dist.mean_occupancy
    return PerformanceMetrics(
        p_block=p_block,
        p_drop=p_drop,
        lambda_h=lambda_h,
        carried_load=carried,
        utilization=carried / policy.c,
        new_throughput=lambda_n * (1.0 - p_block),
        handoff_throughput=lambda_h * (1.0 - p_drop),
    )


def evaluate(policy, lambda_n, lambda_h, mu):
    """
    Performance of a policy at externally given arrival rates

    :param policy: admission policy
    :type policy: AdmissionPolicy
    :param lambda_n: new-call arrival rate
    :type lambda_n: float
    :param lambda_h: handoff arrival rate
    :type lambda_h: float
    :param mu: per-channel departure rate
    :type mu: float
    :return: performance metrics with fp_iterations = 0
    :rtype: PerformanceMetrics
    """
    dist = stationary_distribution(birth_profile(policy, lambda_n, lambda_h), mu)
    return metrics_from_distribution(policy, dist, lambda_n, lambda_h)


def evaluate_with_flow_balance(
    policy,
    params,
    mu_override=None,
    damping=FP_DAMPING,
    tolerance=FP_TOLERANCE,
    max_iterations=FP_MAX_ITERATIONS,
):
    """
    Performance at the handoff rate that balances handoff in-flow and out-flow.

    Damped fixed-point iteration lambda_h <- (1 - w) lambda_h + w RHS(lambda_h),
    starting from lambda_n p_h, stopping once |RHS(lambda_h) - lambda_h| falls
    below tolerance * max(lambda_n, 1).

    :param policy: admission policy
    :type policy: AdmissionPolicy
    :param params: traffic parameters
    :type params: TrafficParams
    :param mu_override: departure rate replacing mu_a + eta
    :type mu_override: float
    :raises ConvergenceError: if the iteration does not settle within max_iterations
    :return: metrics at the fixed point
    :rtype: PerformanceMetrics
    """
    rates = derive_rates(params, mu_override=mu_override)
    tol = tolerance * max(params.lambda_n, 1.0)

    lambda_h = params.lambda_n * rates.p_h
    residual = math.inf
    for iteration in range(1, max_iterations + 1):
        metrics = evaluate(policy, params.lambda_n, lambda_h, rates.mu)
        target = handoff_balance_rhs(params, rates, metrics.p_block, metrics.p_drop)
        residual = abs(target - lambda_h)
        if residual < tol:
            return replace(metrics, fp_iterations=iteration, fp_residual=residual)
        lambda_h = (1.0 - damping) * lambda_h + damping * target

    raise ConvergenceError(
        f"flow balance did not converge for {policy.label} at lambda_n={params.lambda_n} "
        f"(residual {residual:.3e} after {max_iterations} iterations)",
        last_iterate=lambda_h,
        residual=residual,
        iterations=max_iterations,
        alpha=policy.alpha,
    )


# ============================================================================ #
#                         ACCEPTANCE FACTOR SEARCH
# ============================================================================ #


@dataclass(frozen=True)
class AlphaSearchResult:
    alpha_star: float
    metrics: PerformanceMetrics
    grid: List[Tuple[float, PerformanceMetrics]]

    @property
    def tied(self):
        """True if every grid point blocks equally within the tie tolerance"""
        blocks = [m.p_block for _, m in self.grid]
        return max(blocks) - min(blocks) <= ALPHA_TIE_TOLERANCE


def select_alpha(grid):
    """
    pick the acceptance factor with the lowest blocking, ties going to the smallest alpha

    :param grid: (alpha, metrics) pairs in any order
    :type grid: list
    :return: (alpha, metrics) of the winner
    :rtype: tuple
    """
    best = None
    for alpha, metrics in sorted(grid, key=lambda item: item[0]):
        if best is None or metrics.p_block < best[1].p_block - ALPHA_TIE_TOLERANCE:
            best = (alpha, metrics)
    return best


def optimal_alpha(m, n, c, params, alpha_grid, mu_override=None):
    """
    Search a grid of acceptance factors for the lowest flow-balanced blocking

    :param m: threshold below which new calls are always admitted
    :type m: int
    :param n: threshold from which new calls are always refused
    :type n: int
    :param c: number of channels
    :type c: int
    :param params: traffic parameters
    :type params: TrafficParams
    :param alpha_grid: acceptance factors to try
    :type alpha_grid: list
    :raises ConvergenceError: annotated with the failing alpha
    :return: the optimum and the whole grid
    :rtype: AlphaSearchResult
    """
    alphas = sorted({check_probability(a, "alpha") for a in alpha_grid})
    if not alphas:
        raise ParameterDomainError("alpha grid must not be empty")

    grid = []
    for alpha in alphas:
        policy = AdmissionPolicy.acceptance_guard(c, m, n, alpha)
        try:
            grid.append((alpha, evaluate_with_flow_balance(policy, params, mu_override=mu_override)))
        except ConvergenceError as err:
            raise ConvergenceError(
                f"alpha={alpha}: {err}", err.last_iterate, err.residual, err.iterations, alpha=alpha
            ) from err

    alpha_star, metrics = select_alpha(grid)
    return AlphaSearchResult(alpha_star=alpha_star, metrics=metrics, grid=grid)


# ============================================================================ #
#                          CLOSED-FORM REFERENCES
# ============================================================================ #


def erlang_b(servers, load):
    """
    Erlang-B blocking of an M/M/C/C system by the stable recurrence
    B(k) = A B(k-1) / (k + A B(k-1))

    :param servers: number of channels
    :type servers: int
    :param load: offered traffic in erlangs
    :type load: float
    :return: blocking probability
    :rtype: float
    """
    load = check_rate(load, "load", allow_zero=True)
    b = 1.0
    for k in range(1, int(servers) + 1):
        b = load * b / (k + load * b)
    return b


def product_form_distribution(policy, lambda_n, lambda_h, mu):
    """
    Stationary distribution from the explicit product expressions.

    For acceptance-guard states N < i <= C the band factor carries exponent N - M.
    Powers and factorials are evaluated directly, so only small C is supported.

    :param policy: admission policy
    :type policy: AdmissionPolicy
    :raises UnsupportedSizeError: if C exceeds the oracle limit
    :return: stationary distribution
    :rtype: StationaryDistribution
    """
    c = policy.c
    if c > DENSE_ORACLE_MAX_C:
        raise UnsupportedSizeError(f"product-form oracle supports C <= {DENSE_ORACLE_MAX_C}, got {c}")
    mu = check_rate(mu, "mu")
    full = lambda_n + lambda_h

    if policy.kind is PolicyKind.NON_PRIORITY:
        m, n, band = c, c, full
    elif policy.kind is PolicyKind.NEW_CALL_BOUNDING:
        m, n, band = policy.m, policy.m, lambda_h
    else:
        m, n, band = policy.m, policy.n, policy.alpha * lambda_n + lambda_h

    terms = []
    for i in range(c + 1):
        if i <= m:
            numerator = full**i
        elif i <= n:
            numerator = full**m * band ** (i - m)
        else:
            numerator = full**m * band ** (n - m) * lambda_h ** (i - n)
        terms.append(numerator / (math.factorial(i) * mu**i))

    total = math.fsum(terms)
    probs = np.array(terms) / total
    probs.setflags(write=False)
    return StationaryDistribution(probs=probs, log_norm=math.log(total))
