""" Traffic parameters of a cell: call, dwell and handoff rates """

import math
from dataclasses import dataclass

from guardband.helper_functions import ParameterDomainError, check_probability, check_rate


@dataclass(frozen=True)
class TrafficParams:
    """
    Arrival, call-length and mobility rates of a single cell, all per second

    :param lambda_n: Poisson arrival rate of new calls
    :param mu_a: inverse mean call duration
    :param eta: inverse mean cell dwell time
    """

    lambda_n: float
    mu_a: float
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "lambda_n", check_rate(self.lambda_n, "lambda_n", allow_zero=True))
        object.__setattr__(self, "mu_a", check_rate(self.mu_a, "mu_a"))
        object.__setattr__(self, "eta", check_rate(self.eta, "eta"))

    @classmethod
    def from_mean_times(cls, lambda_n, call_mean_s, dwell_mean_s):
        """
        Build parameters from mean call length and mean dwell time in seconds

        :param lambda_n: new-call arrival rate
        :type lambda_n: float
        :param call_mean_s: mean call duration (1/mu_a)
        :type call_mean_s: float
        :param dwell_mean_s: mean dwell time (1/eta)
        :type dwell_mean_s: float
        :return: traffic parameters
        :rtype: TrafficParams
        """
        call_mean_s = check_rate(call_mean_s, "call_mean_s")
        dwell_mean_s = check_rate(dwell_mean_s, "dwell_mean_s")
        return cls(lambda_n=lambda_n, mu_a=1.0 / call_mean_s, eta=1.0 / dwell_mean_s)

    def with_lambda_n(self, lambda_n):
        return TrafficParams(lambda_n=lambda_n, mu_a=self.mu_a, eta=self.eta)


@dataclass(frozen=True)
class DerivedRates:
    """
    Channel departure rate ``mu`` and per-call handover probability ``p_h``
    """

    mu: float
    p_h: float


def derive_rates(params, mu_override=None):
    """
    Derive the channel holding rate and the handover probability.

    The holding time is the minimum of independent exponential call length and
    dwell time, hence exponential with rate mu_a + eta. The handover probability
    is the chance that the dwell time expires first.

    :param params: traffic parameters
    :type params: TrafficParams
    :param mu_override: use this departure rate instead of mu_a + eta
    :type mu_override: float
    :raises ParameterDomainError: if the rates are not finite and positive
    :return: derived rates
    :rtype: DerivedRates
    """
    mu_a = check_rate(params.mu_a, "mu_a")
    eta = check_rate(params.eta, "eta")

    p_h = eta / (eta + mu_a)
    mu = mu_a + eta if mu_override is None else check_rate(mu_override, "mu_override")

    if not 0.0 < p_h < 1.0:
        raise ParameterDomainError(f"handover probability degenerates to {p_h} for mu_a={mu_a}, eta={eta}")
    return DerivedRates(mu=mu, p_h=p_h)


def handoff_balance_rhs(params, rates, p_b, p_d):
    """
    Handoff arrival rate that balances handoffs into and out of a cell

    lambda_h = lambda_n * p_h * (1 - p_b) / (1 - p_h * (1 - p_d))

    :param params: traffic parameters
    :type params: TrafficParams
    :param rates: derived rates
    :type rates: DerivedRates
    :param p_b: new-call blocking probability
    :type p_b: float
    :param p_d: handoff dropping probability
    :type p_d: float
    :return: handoff arrival rate
    :rtype: float
    """
    p_b = check_probability(p_b, "p_b")
    p_d = check_probability(p_d, "p_d")
    return params.lambda_n * rates.p_h * (1.0 - p_b) / (1.0 - rates.p_h * (1.0 - p_d))


def zero_loss_handoff_rate(params):
    """handoff arrival rate when nothing is blocked or dropped"""
    p_h = derive_rates(params).p_h
    return params.lambda_n * p_h / (1.0 - p_h)


def offered_load(lambda_n, lambda_h, mu):
    """
    Offered traffic in erlangs

    :return: (lambda_n + lambda_h) / mu
    :rtype: float
    """
    mu = check_rate(mu, "mu")
    load = (lambda_n + lambda_h) / mu
    if not math.isfinite(load):
        raise ParameterDomainError(f"offered load is not finite ({load})")
    return load
