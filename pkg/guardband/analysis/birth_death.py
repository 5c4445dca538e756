""" Stationary distribution of finite birth-death chains with linear death rates """

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from guardband.helper_functions import ParameterDomainError, UnsupportedSizeError, check_rate

DENSE_ORACLE_MAX_C = 64


@dataclass(frozen=True)
class BirthRateProfile:
    """
    Birth rates b(0..C-1) of a chain on states 0..C

    :param c: number of channels C
    :param rates: array of C non-negative birth rates, b(i) moves state i to i+1
    """

    c: int
    rates: np.ndarray

    def __post_init__(self):
        if int(self.c) != self.c or self.c < 1:
            raise ParameterDomainError(f"channel count must be a positive integer, got {self.c}")
        rates = np.asarray(self.rates, dtype=float)
        if rates.shape != (self.c,):
            raise ParameterDomainError(f"expected {self.c} birth rates, got shape {rates.shape}")
        if not np.all(np.isfinite(rates)) or np.any(rates < 0):
            raise ParameterDomainError("birth rates must be finite and >= 0")
        rates.setflags(write=False)
        object.__setattr__(self, "c", int(self.c))
        object.__setattr__(self, "rates", rates)

    def rate_at(self, i):
        if not 0 <= i < self.c:
            raise IndexError(f"state {i} has no birth transition (C={self.c})")
        return float(self.rates[i])


@dataclass(frozen=True)
class StationaryDistribution:
    """
    Normalized occupancy probabilities P(0..C)

    :param probs: array of C+1 probabilities
    :param log_norm: log of the normalization constant relative to P(0) = 1
    """

    probs: np.ndarray
    log_norm: float

    @property
    def c(self):
        return len(self.probs) - 1

    @property
    def mean_occupancy(self):
        """mean number of busy channels (carried load in erlangs)"""
        return float(np.dot(np.arange(self.c + 1), self.probs))


def stationary_distribution(profile, mu):
    """
    Solve the detailed-balance recurrence P(i) = P(i-1) b(i-1) / (i mu).

    The running products are accumulated in log space so that C = 130 at
    several hundred erlangs neither overflows nor underflows. A zero birth rate
    cuts the chain; states above the cut get exact zeros.

    :param profile: birth rates of the chain
    :type profile: BirthRateProfile
    :param mu: per-channel departure rate
    :type mu: float
    :raises ParameterDomainError: if mu is not positive
    :return: stationary distribution
    :rtype: StationaryDistribution
    """
    mu = check_rate(mu, "mu")
    states = np.arange(1, profile.c + 1, dtype=float)
    ratios = profile.rates / (states * mu)

    with np.errstate(divide="ignore"):
        log_terms = np.concatenate(([0.0], np.cumsum(np.log(ratios))))

    peak = np.max(log_terms)
    unnormalized = np.exp(log_terms - peak)
    total = unnormalized.sum()
    probs = unnormalized / total
    probs.setflags(write=False)

    return StationaryDistribution(probs=probs, log_norm=float(peak + math.log(total)))


def stationary_distribution_dense_oracle(profile, mu):
    """
    Solve pi Q = 0, sum(pi) = 1 on the full generator by direct elimination.

    Independent of the recurrence; meant for verification at small C only.

    :param profile: birth rates of the chain
    :type profile: BirthRateProfile
    :param mu: per-channel departure rate
    :type mu: float
    :raises UnsupportedSizeError: if C exceeds the oracle limit
    :return: stationary distribution
    :rtype: StationaryDistribution
    """
    mu = check_rate(mu, "mu")
    c = profile.c
    if c > DENSE_ORACLE_MAX_C:
        raise UnsupportedSizeError(f"dense oracle supports C <= {DENSE_ORACLE_MAX_C}, got {c}")

    generator = np.zeros((c + 1, c + 1))
    for i in range(c):
        generator[i, i + 1] = profile.rates[i]
    for i in range(1, c + 1):
        generator[i, i - 1] = i * mu
    generator[np.diag_indices(c + 1)] = -generator.sum(axis=1)

    # replace one balance equation by the normalization
    system = generator.T.copy()
    system[-1, :] = 1.0
    rhs = np.zeros(c + 1)
    rhs[-1] = 1.0
    probs = np.clip(linalg.solve(system, rhs), 0.0, None)
    probs = probs / probs.sum()
    probs.setflags(write=False)

    return StationaryDistribution(probs=probs, log_norm=float(math.log(1.0 / probs[0])) if probs[0] > 0 else math.inf)


def tail_mass(dist, start):
    """
    Probability of occupying state ``start`` or above

    :param dist: stationary distribution
    :type dist: StationaryDistribution
    :param start: first state included
    :type start: int
    :raises IndexError: if start is outside 0..C
    :return: sum of P(start..C)
    :rtype: float
    """
    if not 0 <= start <= dist.c:
        raise IndexError(f"state {start} outside 0..{dist.c}")
    if start == 0:
        return 1.0
    return float(dist.probs[start:].sum())
