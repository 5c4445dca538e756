""" Discrete-event simulation of one cell under a call admission policy """

import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy import stats

from guardband.analysis.schemes import AdmissionPolicy, admission_vector
from guardband.analysis.traffic import TrafficParams, derive_rates
from guardband.helper_functions import DegenerateRunError, ParameterDomainError, check_rate

# Offsets added to the master seed's spawn key, one independent stream per concern.
ARRIVAL_STREAM = 0
HOLDING_STREAM = 1
TYPE_STREAM = 2
ADMISSION_STREAM = 3

BATCHES = 20
MIN_WARMUP = 10_000
_BLOCK = 1 << 14

_NEW_ARRIVAL = 0
_HANDOFF_ARRIVAL = 1
_DEPARTURE = 2


class HoldingModel(Enum):
    AGGREGATE = "aggregate"
    COMPETING = "competing"


class CountOn(Enum):
    NEW = "new"
    HANDOFF = "handoff"


@dataclass(frozen=True)
class OpenLoop:
    """handoff calls arrive as an external Poisson stream"""

    lambda_h: float

    def __post_init__(self):
        object.__setattr__(self, "lambda_h", check_rate(self.lambda_h, "lambda_h", allow_zero=True))


@dataclass(frozen=True)
class ClosedLoopWraparound:
    """calls leaving the cell re-enter it immediately as handoff arrivals"""


@dataclass(frozen=True)
class SimConfig:
    """
    One simulation run

    :param policy: admission policy under test
    :param params: traffic parameters
    :param mode: OpenLoop or ClosedLoopWraparound
    :param seed: master seed (unsigned 64 bit)
    :param target_arrivals: measured arrivals of the counted stream
    :param warmup_arrivals: discarded arrivals, defaults to max(10% of target, 10000)
    :param count_on: stream that drives warm-up and stopping
    :param holding: how channel holding times are drawn
    """

    policy: AdmissionPolicy
    params: TrafficParams
    mode: Union[OpenLoop, ClosedLoopWraparound]
    seed: int
    target_arrivals: int
    warmup_arrivals: Optional[int] = None
    count_on: CountOn = CountOn.NEW
    holding: HoldingModel = HoldingModel.AGGREGATE

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterDomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if int(self.target_arrivals) < 1:
            raise ParameterDomainError(f"target_arrivals must be >= 1, got {self.target_arrivals}")
        warmup = self.warmup_arrivals
        if warmup is None:
            warmup = max(int(self.target_arrivals) // 10, MIN_WARMUP)
        if int(warmup) < 0:
            raise ParameterDomainError(f"warmup_arrivals must be >= 0, got {warmup}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "target_arrivals", int(self.target_arrivals))
        object.__setattr__(self, "warmup_arrivals", int(warmup))
        object.__setattr__(self, "count_on", CountOn(self.count_on))
        object.__setattr__(self, "holding", HoldingModel(self.holding))


@dataclass(frozen=True)
class SimReport:
    """
    Empirical blocking and dropping of one run. Half-widths are for 95% intervals;
    the ``_batch`` variants come from batch means and account for correlation
    between successive arrivals.
    """

    seed: int
    new_offered: int
    new_blocked: int
    handoff_offered: int
    handoff_dropped: int
    p_block_hat: float
    p_drop_hat: float
    ci95_block: float
    ci95_drop: float
    ci95_block_batch: float
    ci95_drop_batch: float
    measured_time: float
    measured_lambda_h: float
    ci95_lambda_h: float


class _VariateStream:
    """buffered draws from one PCG64 stream"""

    def __init__(self, seed, offset):
        self._rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(offset,))))
        self._exp = []
        self._uni = []

    def exponential(self):
        if not self._exp:
            self._exp = self._rng.standard_exponential(_BLOCK).tolist()
            self._exp.reverse()
        return self._exp.pop()

    def uniform(self):
        if not self._uni:
            self._uni = self._rng.random(_BLOCK).tolist()
            self._uni.reverse()
        return self._uni.pop()


def _binomial_half_width(successes, trials):
    if trials == 0:
        return math.nan
    p = successes / trials
    return stats.norm.ppf(0.975) * math.sqrt(p * (1.0 - p) / trials)


def _batch_half_width(hits, totals):
    ratios = [h / n for h, n in zip(hits, totals) if n > 0]
    if len(ratios) < 2:
        return math.nan
    return stats.t.ppf(0.975, len(ratios) - 1) * float(np.std(ratios, ddof=1)) / math.sqrt(len(ratios))


def simulate(config):
    """
    Run the event loop until ``target_arrivals`` measured arrivals of the
    counted stream have been offered.

    Occupancy i never leaves 0..C. New calls are admitted with probability
    a(i); handoff calls whenever i < C. With the aggregate holding model each
    admission draws one Exp(mu_a + eta) holding time and a Bernoulli(p_h) coin
    deciding handoff-out; the competing model draws the call length and the
    dwell time separately and carries the residual call length into a
    wraparound re-entry.

    :param config: run description
    :type config: SimConfig
    :raises DegenerateRunError: if the counted stream can never receive an arrival
    :return: counters and estimates
    :rtype: SimReport
    """
    policy, params = config.policy, config.params
    rates = derive_rates(params)
    closed_loop = isinstance(config.mode, ClosedLoopWraparound)
    lambda_h = 0.0 if closed_loop else config.mode.lambda_h
    competing = config.holding is HoldingModel.COMPETING
    count_new = config.count_on is CountOn.NEW

    a = admission_vector(policy).tolist()
    if count_new and params.lambda_n == 0:
        raise DegenerateRunError("no new calls are offered (lambda_n = 0); count on handoff arrivals instead")
    if not count_new and (lambda_h == 0 and (not closed_loop or params.lambda_n == 0)):
        raise DegenerateRunError("no handoff calls are offered")
    # wraparound handoffs only come from admitted new calls
    if not count_new and closed_loop and not any(a):
        raise DegenerateRunError(f"{policy.label} admits no new calls, so the closed loop offers no handoffs")

    arrivals = _VariateStream(config.seed, ARRIVAL_STREAM)
    holding = _VariateStream(config.seed, HOLDING_STREAM)
    coins = _VariateStream(config.seed, TYPE_STREAM)
    admission = _VariateStream(config.seed, ADMISSION_STREAM)

    c = policy.c
    mu, p_h, mu_a, eta = rates.mu, rates.p_h, params.mu_a, params.eta
    warmup, target = config.warmup_arrivals, config.target_arrivals

    events = []
    seq = 0

    def push(time, kind, payload=None):
        nonlocal seq
        heapq.heappush(events, (time, seq, kind, payload))
        seq += 1

    def admit(now, residual):
        # schedule the departure of a call that just got a channel
        if competing:
            call_left = residual if residual is not None else holding.exponential() / mu_a
            dwell = holding.exponential() / eta
            if dwell < call_left:
                push(now + dwell, _DEPARTURE, call_left - dwell)
            else:
                push(now + call_left, _DEPARTURE, None)
        else:
            hold = holding.exponential() / mu
            push(now + hold, _DEPARTURE, True if coins.uniform() < p_h else None)

    if params.lambda_n > 0:
        push(arrivals.exponential() / params.lambda_n, _NEW_ARRIVAL)
    if lambda_h > 0:
        push(arrivals.exponential() / lambda_h, _HANDOFF_ARRIVAL)

    occupancy = 0
    counted = 0
    measuring = warmup == 0
    t_start = 0.0
    now = 0.0
    new_offered = new_blocked = handoff_offered = handoff_dropped = 0
    batch_new = [0] * BATCHES
    batch_blocked = [0] * BATCHES
    batch_handoff = [0] * BATCHES
    batch_dropped = [0] * BATCHES
    batch = 0

    def count_arrival():
        nonlocal counted, measuring, t_start, batch
        counted += 1
        if not measuring and counted > warmup:
            measuring = True
            t_start = now
        if measuring:
            batch = min((counted - warmup - 1) * BATCHES // target, BATCHES - 1)

    def offer_handoff(residual):
        nonlocal occupancy, handoff_offered, handoff_dropped
        if not count_new:
            count_arrival()
        if measuring:
            handoff_offered += 1
            batch_handoff[batch] += 1
        if occupancy < c:
            occupancy += 1
            admit(now, residual)
        elif measuring:
            handoff_dropped += 1
            batch_dropped[batch] += 1

    while not (measuring and counted - warmup >= target):
        now, _, kind, payload = heapq.heappop(events)

        if kind == _DEPARTURE:
            occupancy -= 1
            if payload is not None and closed_loop:
                offer_handoff(payload if competing else None)
        elif kind == _HANDOFF_ARRIVAL:
            push(now + arrivals.exponential() / lambda_h, _HANDOFF_ARRIVAL)
            offer_handoff(None)
        else:
            push(now + arrivals.exponential() / params.lambda_n, _NEW_ARRIVAL)
            if count_new:
                count_arrival()
            if measuring:
                new_offered += 1
                batch_new[batch] += 1
            p_admit = a[occupancy]
            if p_admit == 1.0 or (p_admit > 0.0 and admission.uniform() < p_admit):
                occupancy += 1
                admit(now, None)
            elif measuring:
                new_blocked += 1
                batch_blocked[batch] += 1

    if count_new and new_offered == 0:
        raise DegenerateRunError("no new calls offered after warm-up")

    elapsed = now - t_start
    lambda_h_hat = handoff_offered / elapsed if elapsed > 0 else math.nan
    lambda_h_ci = stats.norm.ppf(0.975) * math.sqrt(handoff_offered) / elapsed if elapsed > 0 else math.nan

    return SimReport(
        seed=config.seed,
        new_offered=new_offered,
        new_blocked=new_blocked,
        handoff_offered=handoff_offered,
        handoff_dropped=handoff_dropped,
        p_block_hat=new_blocked / new_offered if new_offered else math.nan,
        p_drop_hat=handoff_dropped / handoff_offered if handoff_offered else math.nan,
        ci95_block=_binomial_half_width(new_blocked, new_offered),
        ci95_drop=_binomial_half_width(handoff_dropped, handoff_offered),
        ci95_block_batch=_batch_half_width(batch_blocked, batch_new),
        ci95_drop_batch=_batch_half_width(batch_dropped, batch_handoff),
        measured_time=elapsed,
        measured_lambda_h=lambda_h_hat,
        ci95_lambda_h=lambda_h_ci,
    )


def batch_simulate(configs, logger, jobs=1):
    """
    Run several configurations; results keep the input order.

    A failing configuration does not abort the batch: its exception object is
    returned in place of the report.

    :param configs: run descriptions
    :type configs: list
    :param logger: reports progress and failures
    :param jobs: worker processes, 1 runs in-process
    :type jobs: int
    :raises ValueError: if configs is empty
    :return: SimReport or exception per configuration
    :rtype: list
    """
    configs = list(configs)
    if not configs:
        raise ValueError("batch_simulate needs at least one configuration")

    logger.info(f"Simulating {len(configs)} configuration(s)")
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            outcomes = list(executor.map(_simulate_or_error, configs))
    else:
        outcomes = [_simulate_or_error(config) for config in configs]

    for index, outcome in enumerate(outcomes):
        if isinstance(outcome, Exception):
            logger.warning(f"simulation {index} ({configs[index].policy.label}) failed: {outcome}")
    return outcomes


def _simulate_or_error(config):
    try:
        return simulate(config)
    except (DegenerateRunError, ParameterDomainError) as err:
        return err
