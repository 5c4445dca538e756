#!/usr/bin/env python

"""Tests for the discrete-event simulator."""

import logging
import math
import unittest
from dataclasses import astuple, replace

from scipy import stats

from guardband.analysis import (
    AdmissionPolicy,
    TrafficParams,
    erlang_b,
    evaluate,
    evaluate_with_flow_balance,
)
from guardband.helper_functions import DegenerateRunError, ParameterDomainError
from guardband.simulation import (
    ClosedLoopWraparound,
    CountOn,
    HoldingModel,
    OpenLoop,
    SimConfig,
    batch_simulate,
    simulate,
)

logger = logging.getLogger("Guardband")

# mu = mu_a + eta = 2, p_h = 1/2
PARAMS = TrafficParams(lambda_n=2.0, mu_a=1.0, eta=1.0)
# 130 channels, mean call 120 s, mean dwell 360 s: p_h = 1/4
REFERENCE = TrafficParams.from_mean_times(1.0, 120, 360)
Z95 = stats.norm.ppf(0.975)


def small_config(**changes):
    values = dict(
        policy=AdmissionPolicy.new_call_bounding(4, 2),
        params=PARAMS,
        mode=OpenLoop(1.0),
        seed=7,
        target_arrivals=60_000,
    )
    values.update(changes)
    return SimConfig(**values)


class testSimConfig(unittest.TestCase):
    """Test validation and defaults of SimConfig"""

    def test_warmupDefault(self):
        self.assertEqual(small_config(target_arrivals=1000).warmup_arrivals, 10_000)
        self.assertEqual(small_config(target_arrivals=200_000).warmup_arrivals, 20_000)
        self.assertEqual(small_config(warmup_arrivals=0).warmup_arrivals, 0)

    def test_invalidValues(self):
        with self.assertRaises(ParameterDomainError):
            small_config(seed=-1)
        with self.assertRaises(ParameterDomainError):
            small_config(seed=2**64)
        with self.assertRaises(ParameterDomainError):
            small_config(target_arrivals=0)
        with self.assertRaises(ParameterDomainError):
            OpenLoop(-0.5)


class testSimulate(unittest.TestCase):
    """Test determinism, stopping and agreement with the analytic model"""

    def test_deterministic(self):
        config = small_config(target_arrivals=20_000)
        self.assertEqual(astuple(simulate(config)), astuple(simulate(config)))

    def test_seedsDiffer(self):
        first = simulate(small_config(target_arrivals=20_000, seed=1))
        second = simulate(small_config(target_arrivals=20_000, seed=2))
        self.assertNotEqual(
            (first.new_blocked, first.handoff_dropped, first.measured_time),
            (second.new_blocked, second.handoff_dropped, second.measured_time),
        )

    def test_stopsAtTarget(self):
        report = simulate(small_config(target_arrivals=5_000))
        self.assertEqual(report.new_offered, 5_000)
        self.assertGreater(report.handoff_offered, 0)
        self.assertGreater(report.measured_time, 0.0)

    def test_noNewCallsIsDegenerate(self):
        with self.assertRaises(DegenerateRunError):
            simulate(small_config(params=PARAMS.with_lambda_n(0.0)))

    def test_noHandoffsIsDegenerate(self):
        with self.assertRaises(DegenerateRunError):
            simulate(small_config(mode=OpenLoop(0.0), count_on=CountOn.HANDOFF))

    def test_closedLoopWithoutAdmissionIsDegenerate(self):
        """a closed loop that never admits a new call never produces a handoff"""
        for policy in (AdmissionPolicy.new_call_bounding(4, 0), AdmissionPolicy.acceptance_guard(4, 0, 0, 0.5)):
            config = small_config(
                policy=policy,
                mode=ClosedLoopWraparound(),
                count_on=CountOn.HANDOFF,
                target_arrivals=10,
                warmup_arrivals=0,
            )
            with self.assertRaises(DegenerateRunError):
                simulate(config)

    def test_countOnHandoffs(self):
        """handoff arrivals drive the run when no new calls are offered"""
        report = simulate(
            small_config(params=PARAMS.with_lambda_n(0.0), count_on=CountOn.HANDOFF, target_arrivals=5_000)
        )
        self.assertEqual(report.handoff_offered, 5_000)
        self.assertEqual(report.new_offered, 0)
        self.assertTrue(math.isnan(report.p_block_hat))

    def test_openLoopMatchesAnalytic(self):
        """blocking and dropping agree with the stationary solution for both holding models"""
        config = small_config()
        expected = evaluate(config.policy, PARAMS.lambda_n, 1.0, 2.0)
        for holding in (HoldingModel.AGGREGATE, HoldingModel.COMPETING):
            report = simulate(replace(config, holding=holding))
            block_tol = 3 * max(report.ci95_block, report.ci95_block_batch)
            drop_tol = 3 * max(report.ci95_drop, report.ci95_drop_batch)
            self.assertLess(abs(report.p_block_hat - expected.p_block), block_tol, holding)
            self.assertLess(abs(report.p_drop_hat - expected.p_drop), drop_tol, holding)

    def test_handSolvedGuardChain(self):
        """C = 2, m = 1, n = 2, alpha = 0.5, lambda_n = lambda_h = mu = 1: p_block 5/9, p_drop 1/3"""
        report = simulate(
            SimConfig(
                policy=AdmissionPolicy.acceptance_guard(2, 1, 2, 0.5),
                params=TrafficParams(lambda_n=1.0, mu_a=0.5, eta=0.5),
                mode=OpenLoop(1.0),
                seed=2024,
                target_arrivals=100_000,
            )
        )
        self.assertLess(abs(report.p_block_hat - 5 / 9), 3 * max(report.ci95_block, report.ci95_block_batch))
        self.assertLess(abs(report.p_drop_hat - 1 / 3), 3 * max(report.ci95_drop, report.ci95_drop_batch))

    def test_handoffOnlyIsErlangB(self):
        """without new calls the cell is an M/M/C/C loss system for handoffs"""
        report = simulate(
            small_config(params=PARAMS.with_lambda_n(0.0), count_on=CountOn.HANDOFF, target_arrivals=50_000)
        )
        expected = erlang_b(4, 0.5)
        self.assertLess(abs(report.p_drop_hat - expected), 3 * max(report.ci95_drop, report.ci95_drop_batch))

    def test_openLoopGrid(self):
        """three policies at five rates, C = 8: at most one cell outside the tolerance"""
        policies = [
            AdmissionPolicy.non_priority(8),
            AdmissionPolicy.new_call_bounding(8, 6),
            AdmissionPolicy.acceptance_guard(8, 5, 7, 0.4),
        ]
        misses = 0
        for k, policy in enumerate(policies):
            for j, lambda_n in enumerate((2.0, 4.0, 6.0, 8.0, 10.0)):
                params = PARAMS.with_lambda_n(lambda_n)
                lambda_h = lambda_n / 2
                expected = evaluate(policy, lambda_n, lambda_h, 2.0)
                report = simulate(
                    SimConfig(
                        policy=policy,
                        params=params,
                        mode=OpenLoop(lambda_h),
                        seed=100 + 10 * k + j,
                        target_arrivals=20_000,
                    )
                )
                block_ok = abs(report.p_block_hat - expected.p_block) <= 3 * max(
                    report.ci95_block, report.ci95_block_batch, 1e-4
                )
                drop_ok = abs(report.p_drop_hat - expected.p_drop) <= 3 * max(
                    report.ci95_drop, report.ci95_drop_batch, 1e-4
                )
                misses += not (block_ok and drop_ok)
        self.assertLessEqual(misses, 1)

    def test_closedLoopMatchesFlowBalance(self):
        """the measured handoff rate of the wraparound cell matches the balanced rate at moderate load"""
        policy = AdmissionPolicy.non_priority(10)
        balanced = evaluate_with_flow_balance(policy, PARAMS)
        for holding in (HoldingModel.AGGREGATE, HoldingModel.COMPETING):
            report = simulate(
                SimConfig(
                    policy=policy,
                    params=PARAMS,
                    mode=ClosedLoopWraparound(),
                    seed=11,
                    target_arrivals=50_000,
                    holding=holding,
                )
            )
            self.assertLess(abs(report.measured_lambda_h - balanced.lambda_h) / balanced.lambda_h, 0.04, holding)
            # a re-entering call finds the channel it just released
            self.assertEqual(report.handoff_dropped, 0)
            self.assertEqual(report.p_drop_hat, 0.0)

    def test_holdingModelsIndistinguishable(self):
        """fresh aggregate holding times and carried-over residuals give the same metrics"""
        aggregate = simulate(small_config(seed=21))
        competing = simulate(small_config(seed=22, holding=HoldingModel.COMPETING))
        for metric, half_widths in (
            ("p_block_hat", ("ci95_block", "ci95_block_batch")),
            ("p_drop_hat", ("ci95_drop", "ci95_drop_batch")),
        ):
            errors = [max(getattr(report, name) for name in half_widths) / Z95 for report in (aggregate, competing)]
            difference = getattr(aggregate, metric) - getattr(competing, metric)
            self.assertLess(abs(difference), 3 * math.hypot(*errors), metric)

        closed = [
            simulate(small_config(seed=seed, mode=ClosedLoopWraparound(), holding=holding))
            for seed, holding in ((23, HoldingModel.AGGREGATE), (24, HoldingModel.COMPETING))
        ]
        difference = closed[0].measured_lambda_h - closed[1].measured_lambda_h
        self.assertLess(abs(difference), 3 * math.hypot(*(report.ci95_lambda_h / Z95 for report in closed)))


class testClosedLoopReference(unittest.TestCase):
    """Closed-loop wraparound at 130 channels, mean call 120 s, mean dwell 360 s"""

    policy = AdmissionPolicy.acceptance_guard(130, 100, 110, 0.5)

    def run_cell(self, lambda_n, seed):
        return simulate(
            SimConfig(
                policy=self.policy,
                params=REFERENCE.with_lambda_n(lambda_n),
                mode=ClosedLoopWraparound(),
                seed=seed,
                target_arrivals=200_000,
            )
        )

    def test_handoffRateMatchesFixedPoint(self):
        for lambda_n, seed in ((0.6, 61), (1.0, 101)):
            report = self.run_cell(lambda_n, seed)
            balanced = evaluate_with_flow_balance(self.policy, REFERENCE.with_lambda_n(lambda_n))
            self.assertLess(balanced.fp_residual, 1e-9)
            standard_error = report.ci95_lambda_h / Z95
            self.assertLess(abs(report.measured_lambda_h - balanced.lambda_h), 3 * standard_error, lambda_n)

    def test_handoffRateBalancesOwnEstimates(self):
        """lambda_h / lambda_n = p_h (1 - p_block) / (1 - p_h (1 - p_drop)) from the same run"""
        p_h = 0.25
        for lambda_n, seed in ((0.8, 81), (1.2, 121)):
            report = self.run_cell(lambda_n, seed)
            new_rate = report.new_offered / report.measured_time
            ratio = report.measured_lambda_h / new_rate
            denominator = 1.0 - p_h * (1.0 - report.p_drop_hat)
            expected = p_h * (1.0 - report.p_block_hat) / denominator
            handoff_error = report.ci95_lambda_h / report.measured_lambda_h / Z95
            ratio_error = ratio * math.hypot(handoff_error, 1 / math.sqrt(report.new_offered))
            block_error = p_h / denominator * max(report.ci95_block, report.ci95_block_batch) / Z95
            self.assertLess(abs(ratio - expected), 3 * math.hypot(ratio_error, block_error), lambda_n)


class testBatchSimulate(unittest.TestCase):
    """Test batch runs"""

    def test_orderAndFailures(self):
        configs = [
            small_config(seed=3, target_arrivals=2_000),
            small_config(seed=4, target_arrivals=2_000),
            small_config(params=PARAMS.with_lambda_n(0.0)),
        ]
        outcomes = batch_simulate(configs, logger)
        self.assertEqual([outcomes[0].seed, outcomes[1].seed], [3, 4])
        self.assertIsInstance(outcomes[2], DegenerateRunError)

    def test_matchesSingleRuns(self):
        config = small_config(seed=5, target_arrivals=2_000)
        self.assertEqual(astuple(batch_simulate([config], logger)[0]), astuple(simulate(config)))

    def test_empty(self):
        with self.assertRaises(ValueError):
            batch_simulate([], logger)


if __name__ == "__main__":
    unittest.main()
