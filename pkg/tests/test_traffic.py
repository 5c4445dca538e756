#!/usr/bin/env python

"""Tests for traffic parameters and derived rates."""

import math
import unittest

from guardband.analysis import (
    DerivedRates,
    TrafficParams,
    derive_rates,
    handoff_balance_rhs,
    offered_load,
    zero_loss_handoff_rate,
)
from guardband.helper_functions import ParameterDomainError


class testTrafficParams(unittest.TestCase):
    """Test construction and validation of TrafficParams"""

    def test_fromMeanTimes(self):
        """mean call 120 s and mean dwell 360 s give mu = 1/90 and p_h = 1/4"""
        params = TrafficParams.from_mean_times(1.0, 120, 360)
        self.assertAlmostEqual(params.mu_a, 1 / 120, places=15)
        self.assertAlmostEqual(params.eta, 1 / 360, places=15)
        rates = derive_rates(params)
        self.assertAlmostEqual(rates.mu, 1 / 90, places=15)
        self.assertAlmostEqual(rates.p_h, 0.25, places=15)

    def test_zeroNewCallRateAllowed(self):
        """lambda_n = 0 is a valid operating point"""
        self.assertEqual(TrafficParams(0.0, 1.0, 1.0).lambda_n, 0.0)

    def test_invalidRates(self):
        """negative, zero or non-finite rates are rejected"""
        with self.assertRaises(ParameterDomainError):
            TrafficParams(-1.0, 1.0, 1.0)
        with self.assertRaises(ParameterDomainError):
            TrafficParams(1.0, 0.0, 1.0)
        with self.assertRaises(ParameterDomainError):
            TrafficParams(1.0, 1.0, math.inf)
        with self.assertRaises(ParameterDomainError):
            TrafficParams(1.0, "fast", 1.0)

    def test_withLambdaN(self):
        params = TrafficParams(1.0, 0.5, 0.25).with_lambda_n(2.0)
        self.assertEqual(params, TrafficParams(2.0, 0.5, 0.25))


class testDerivedRates(unittest.TestCase):
    """Test derive_rates and the flow-balance right-hand side"""

    def test_muOverride(self):
        """mu_override replaces mu but not p_h"""
        rates = derive_rates(TrafficParams(1.0, 1.0, 3.0), mu_override=10.0)
        self.assertEqual(rates, DerivedRates(mu=10.0, p_h=0.75))

    def test_invalidMuOverride(self):
        with self.assertRaises(ParameterDomainError):
            derive_rates(TrafficParams(1.0, 1.0, 1.0), mu_override=0.0)

    def test_balanceWithoutLoss(self):
        """without blocking and dropping the balanced rate is lambda_n p_h / (1 - p_h)"""
        params = TrafficParams(2.0, 1.0, 1.0)
        rates = derive_rates(params)
        self.assertAlmostEqual(handoff_balance_rhs(params, rates, 0.0, 0.0), 2.0, places=15)
        self.assertAlmostEqual(zero_loss_handoff_rate(params), 2.0, places=15)

    def test_balanceWithLoss(self):
        """blocked calls never hand off; every handoff is dropped when p_d = 1"""
        params = TrafficParams(2.0, 1.0, 1.0)
        rates = derive_rates(params)
        self.assertEqual(handoff_balance_rhs(params, rates, 1.0, 0.0), 0.0)
        self.assertAlmostEqual(handoff_balance_rhs(params, rates, 0.0, 1.0), 1.0, places=15)

    def test_balanceWorkedExample(self):
        """lambda_n = 1, p_h = 1/4, p_b = 0.1, p_d = 0.05 gives 0.225 / 0.7625"""
        params = TrafficParams.from_mean_times(1.0, 120, 360)
        rhs = handoff_balance_rhs(params, derive_rates(params), 0.1, 0.05)
        self.assertAlmostEqual(rhs, 0.225 / 0.7625, places=12)
        self.assertAlmostEqual(rhs, 0.295081967, places=9)

    def test_balanceNonincreasing(self):
        """more blocking or more dropping never raises the balanced handoff rate"""
        grid = [k / 20 for k in range(21)]
        cases = (
            TrafficParams(2.0, 1.0, 1.0),
            TrafficParams(0.7, 0.2, 3.0),
            TrafficParams.from_mean_times(1.0, 120, 360),
        )
        for params in cases:
            rates = derive_rates(params)
            for fixed in grid:
                by_block = [handoff_balance_rhs(params, rates, p_b, fixed) for p_b in grid]
                by_drop = [handoff_balance_rhs(params, rates, fixed, p_d) for p_d in grid]
                self.assertTrue(all(v2 <= v1 for v1, v2 in zip(by_block, by_block[1:])), (params, fixed))
                self.assertTrue(all(v2 <= v1 for v1, v2 in zip(by_drop, by_drop[1:])), (params, fixed))

    def test_balanceRejectsInvalidProbability(self):
        params = TrafficParams(2.0, 1.0, 1.0)
        with self.assertRaises(ParameterDomainError):
            handoff_balance_rhs(params, derive_rates(params), 1.5, 0.0)

    def test_offeredLoad(self):
        self.assertEqual(offered_load(3.0, 1.0, 2.0), 2.0)
        with self.assertRaises(ParameterDomainError):
            offered_load(1.0, 1.0, 0.0)


if __name__ == "__main__":
    unittest.main()
