""" Sweeps over the new-call arrival rate, acceptance factor scans and simulation cross-checks """

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from guardband.analysis.schemes import (
    ALPHA_TIE_TOLERANCE,
    AdmissionPolicy,
    PolicyKind,
    evaluate,
    evaluate_with_flow_balance,
    select_alpha,
)
from guardband.analysis.traffic import TrafficParams, derive_rates
from guardband.helper_functions import ConfigError, ConvergenceError, DegenerateRunError
from guardband.helper_functions.config import SimTemplate
from guardband.simulation.simulator import (
    ClosedLoopWraparound,
    HoldingModel,
    OpenLoop,
    SimConfig,
    batch_simulate,
    simulate,
)

CSV_COLUMNS = ["lambda_n", "policy", "alpha", "lambda_h", "p_block", "p_drop", "fp_iterations"]
SIM_COLUMNS = ["sim_p_block", "sim_p_drop", "sim_ci_block", "sim_ci_drop"]
FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class SweepSpec:
    """
    One sweep: every policy evaluated at every new-call rate of a linear range

    :param mu_a: inverse mean call length
    :param eta: inverse mean dwell time
    :param lambda_range: (start, stop, steps), inclusive
    :param policies: policies in output order
    :param flow_balance: solve for lambda_h instead of using ``lambda_h``
    :param lambda_h: fixed handoff rate when flow_balance is False
    :param simulate: optional cross-validation template
    """

    mu_a: float
    eta: float
    lambda_range: Tuple[float, float, int]
    policies: List[AdmissionPolicy]
    flow_balance: bool = True
    lambda_h: float = 0.0
    mu_override: Optional[float] = None
    simulate: Optional[SimTemplate] = None
    output: Optional[str] = None
    chart: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        start, stop, steps = self.lambda_range
        if not start > 0 or stop < start or steps < 1:
            raise ConfigError("sweep", f"need start > 0, stop >= start and steps >= 1, got {self.lambda_range}")

    @classmethod
    def from_config(cls, config, output=None, chart=None):
        """
        :param config: validated configuration
        :type config: GuardbandConfig
        """
        return cls(
            mu_a=config.mu_a,
            eta=config.eta,
            lambda_range=config.sweep,
            policies=list(config.policies),
            flow_balance=config.flow_balance,
            lambda_h=config.lambda_h,
            mu_override=config.mu_override,
            simulate=config.simulate,
            output=output or config.output_csv,
            chart=chart or config.output_chart,
            jobs=config.jobs,
        )


@dataclass(frozen=True)
class SweepRow:
    lambda_n: float
    policy: str
    alpha: float
    lambda_h: float
    p_block: float
    p_drop: float
    fp_iterations: Optional[int]
    sim_p_block: float = math.nan
    sim_p_drop: float = math.nan
    sim_ci_block: float = math.nan
    sim_ci_drop: float = math.nan
    status: str = "ok"

    @property
    def ok(self):
        return self.status == "ok"


@dataclass(frozen=True)
class _Point:
    lambda_n: float
    policy: AdmissionPolicy
    spec: SweepSpec
    sim_seed: Optional[int] = None


@dataclass
class SweepOutcome:
    frame: pd.DataFrame
    rows: List[SweepRow]

    @property
    def all_ok(self):
        return all(row.ok for row in self.rows)


@dataclass
class AlphaScanOutcome(SweepOutcome):
    summary: Optional[pd.DataFrame] = None
    crossover: Optional[float] = None


def lambda_grid(lambda_range):
    """inclusive linear grid of new-call rates"""
    start, stop, steps = lambda_range
    return [float(x) for x in np.linspace(start, stop, steps)]


def series_name(policy, alpha):
    """
    name of a chart series, e.g. 'acceptance-guard[m=100,n=110]@alpha=0.5'

    :param policy: policy label
    :type policy: str
    :param alpha: acceptance factor or NaN
    :type alpha: float
    """
    if alpha is None or pd.isnull(alpha):
        return policy
    return f"{policy}@alpha={float(alpha):g}"


# ============================================================================ #
#                               POINT EVALUATION
# ============================================================================ #


def evaluate_point(point):
    """
    Evaluate one (lambda_n, policy) pair; failures become status rows

    :param point: operating point
    :type point: _Point
    :return: one CSV row
    :rtype: SweepRow
    """
    spec, policy = point.spec, point.policy
    params = TrafficParams(lambda_n=point.lambda_n, mu_a=spec.mu_a, eta=spec.eta)
    alpha = policy.alpha if policy.kind is PolicyKind.ACCEPTANCE_GUARD else math.nan

    try:
        if spec.flow_balance:
            metrics = evaluate_with_flow_balance(policy, params, mu_override=spec.mu_override)
        else:
            mu = derive_rates(params, mu_override=spec.mu_override).mu
            metrics = evaluate(policy, point.lambda_n, spec.lambda_h, mu)
    except ConvergenceError as err:
        return SweepRow(
            lambda_n=point.lambda_n,
            policy=policy.label,
            alpha=alpha,
            lambda_h=err.last_iterate,
            p_block=math.nan,
            p_drop=math.nan,
            fp_iterations=err.iterations,
            status="convergence-error",
        )

    row = SweepRow(
        lambda_n=point.lambda_n,
        policy=policy.label,
        alpha=alpha,
        lambda_h=metrics.lambda_h,
        p_block=metrics.p_block,
        p_drop=metrics.p_drop,
        fp_iterations=metrics.fp_iterations,
    )
    if spec.simulate is None:
        return row

    template = spec.simulate
    mode = ClosedLoopWraparound() if template.mode == "closed-loop" else OpenLoop(metrics.lambda_h)
    try:
        report = simulate(
            SimConfig(
                policy=policy,
                params=params,
                mode=mode,
                seed=point.sim_seed,
                target_arrivals=template.target_arrivals,
                warmup_arrivals=template.warmup_arrivals,
                holding=HoldingModel(template.holding),
            )
        )
    except DegenerateRunError:
        return _with(row, status="degenerate-simulation")
    return _with(
        row,
        sim_p_block=report.p_block_hat,
        sim_p_drop=report.p_drop_hat,
        sim_ci_block=report.ci95_block,
        sim_ci_drop=report.ci95_drop,
    )


def _with(row, **changes):
    values = asdict(row)
    values.update(changes)
    return SweepRow(**values)


def _run_points(points, jobs):
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            return list(executor.map(evaluate_point, points))
    return [evaluate_point(point) for point in points]


def _points(spec, lambdas, policies):
    points = []
    for lambda_n in lambdas:
        for policy in policies:
            # simulation seeds: template seed + position of the point in output order
            seed = (spec.simulate.seed + len(points)) % 2**64 if spec.simulate is not None else None
            points.append(_Point(lambda_n=lambda_n, policy=policy, spec=spec, sim_seed=seed))
    return points


def rows_to_frame(rows, with_simulation):
    """
    Tabulate rows in CSV column order

    :param rows: sweep rows
    :type rows: list
    :param with_simulation: include the simulation columns
    :type with_simulation: bool
    :return: table
    :rtype: pandas DataFrame
    """
    columns = CSV_COLUMNS + (SIM_COLUMNS if with_simulation else []) + ["status"]
    frame = pd.DataFrame([asdict(row) for row in rows], columns=list(SweepRow.__dataclass_fields__))
    frame["fp_iterations"] = frame["fp_iterations"].astype("Int64")
    return frame[columns]


def write_csv(frame, path, logger):
    """
    Write a table with full float precision and fixed line endings

    :param frame: table to write
    :type frame: pandas DataFrame
    :param path: destination
    :type path: str
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    logger.info(f"Wrote {len(frame)} row(s) to {path}")


# ============================================================================ #
#                                 COMMANDS
# ============================================================================ #


def run_solve(config, logger, lambda_values=None):
    """
    Evaluate every configured policy at the configured new-call rate(s)

    :param config: validated configuration
    :type config: GuardbandConfig
    :param lambda_values: new-call rates overriding traffic.lambda_n
    :type lambda_values: list
    :raises ConvergenceError: if a flow-balance solve fails
    :return: one record per (lambda_n, policy)
    :rtype: list
    """
    lambdas = lambda_values if lambda_values else [config.traffic().lambda_n]
    records = []
    for lambda_n in lambdas:
        params = config.traffic(lambda_n)
        for policy in config.policies:
            logger.info(f"Solving {policy.label} at lambda_n={lambda_n:g}")
            if config.flow_balance:
                metrics = evaluate_with_flow_balance(policy, params, mu_override=config.mu_override)
            else:
                mu = derive_rates(params, mu_override=config.mu_override).mu
                metrics = evaluate(policy, lambda_n, config.lambda_h, mu)
            record = {"lambda_n": lambda_n, "policy": policy.label, "alpha": policy.alpha}
            record.update(asdict(metrics))
            records.append(record)
    return records


def run_sweep(spec, logger):
    """
    Evaluate every policy over the new-call rate range and write the CSV

    Rows are ordered by lambda_n, then by the listed policy order. Failed
    points are kept as rows carrying a non-'ok' status.

    :param spec: sweep description
    :type spec: SweepSpec
    :return: table and rows
    :rtype: SweepOutcome
    """
    lambdas = lambda_grid(spec.lambda_range)
    logger.info(f"Sweeping {len(spec.policies)} policies over {len(lambdas)} new-call rates")
    rows = _run_points(_points(spec, lambdas, spec.policies), spec.jobs)
    for row in rows:
        if not row.ok:
            logger.warning(f"{row.policy} at lambda_n={row.lambda_n:g}: {row.status}")

    outcome = SweepOutcome(frame=rows_to_frame(rows, spec.simulate is not None), rows=rows)
    if spec.output:
        write_csv(outcome.frame, spec.output, logger)
    return outcome


def run_alpha_scan(spec, alpha_grid, logger):
    """
    Evaluate the acceptance-guard policy for every (lambda_n, alpha) pair and
    select the blocking-minimizing alpha at each lambda_n

    The thresholds are taken from the first configured acceptance-guard policy.

    :param spec: sweep description
    :type spec: SweepSpec
    :param alpha_grid: acceptance factors to scan
    :type alpha_grid: list
    :raises ConfigError: if no acceptance-guard policy is configured
    :return: grid table, optimum summary and crossover rate
    :rtype: AlphaScanOutcome
    """
    guards = [p for p in spec.policies if p.kind is PolicyKind.ACCEPTANCE_GUARD]
    if not guards:
        raise ConfigError("policies", "alpha-scan needs an acceptance-guard policy")
    alphas = sorted(set(alpha_grid))
    policies = [guards[0].with_alpha(alpha) for alpha in alphas]

    lambdas = lambda_grid(spec.lambda_range)
    logger.info(f"Scanning {len(alphas)} acceptance factors over {len(lambdas)} new-call rates")
    rows = _run_points(_points(spec, lambdas, policies), spec.jobs)

    summary = optimum_summary(rows, lambdas)
    crossover = find_crossover(summary, max(alphas))
    outcome = AlphaScanOutcome(
        frame=rows_to_frame(rows, spec.simulate is not None), rows=rows, summary=summary, crossover=crossover
    )
    if spec.output:
        write_csv(outcome.frame, spec.output, logger)
        write_csv(summary, optimum_path(spec.output), logger)
    return outcome


def optimum_summary(rows, lambdas):
    """
    alpha* per new-call rate, ties going to the smallest alpha

    :param rows: alpha-scan rows
    :type rows: list
    :param lambdas: new-call rates in scan order
    :type lambdas: list
    :return: columns lambda_n, alpha_star, p_block, p_drop, tied
    :rtype: pandas DataFrame
    """
    records = []
    for lambda_n in lambdas:
        grid = [(row.alpha, row) for row in rows if row.lambda_n == lambda_n and row.ok]
        if not grid:
            records.append({"lambda_n": lambda_n, "alpha_star": math.nan, "p_block": math.nan, "p_drop": math.nan})
            continue
        alpha_star, best = select_alpha(grid)
        blocks = [row.p_block for _, row in grid]
        records.append(
            {
                "lambda_n": lambda_n,
                "alpha_star": alpha_star,
                "p_block": best.p_block,
                "p_drop": best.p_drop,
                "tied": len(grid) > 1 and max(blocks) - min(blocks) <= ALPHA_TIE_TOLERANCE,
            }
        )
    return pd.DataFrame(records, columns=["lambda_n", "alpha_star", "p_block", "p_drop", "tied"])


def find_crossover(summary, alpha_max):
    """
    first new-call rate at which alpha* leaves the grid maximum after having reached it

    :param summary: optimum summary
    :type summary: pandas DataFrame
    :param alpha_max: largest scanned alpha
    :type alpha_max: float
    :return: crossover lambda_n, None if alpha* never leaves the maximum
    :rtype: float
    """
    reached = False
    for record in summary.itertuples():
        if pd.isnull(record.alpha_star) or record.tied:
            continue
        if record.alpha_star == alpha_max:
            reached = True
        elif reached:
            return float(record.lambda_n)
    return None


def optimum_path(csv_path):
    stem, _ = os.path.splitext(csv_path)
    return f"{stem}.optimum.csv"


def compare_policies(frame, baseline, candidate):
    """
    Blocking ratio and relative dropping margin of one series against another

    :param frame: sweep table
    :type frame: pandas DataFrame
    :param baseline: series name of the reference policy
    :type baseline: str
    :param candidate: series name of the compared policy
    :type candidate: str
    :return: per lambda_n comparison
    :rtype: pandas DataFrame
    """
    names = [series_name(p, a) for p, a in zip(frame["policy"], frame["alpha"])]
    base = frame[[n == baseline for n in names]].set_index("lambda_n")
    cand = frame[[n == candidate for n in names]].set_index("lambda_n")
    joined = base[["p_block", "p_drop"]].join(cand[["p_block", "p_drop"]], lsuffix="_baseline", rsuffix="_candidate")
    joined["blocking_ratio"] = joined["p_block_candidate"] / joined["p_block_baseline"]
    joined["dropping_rel_margin"] = (
        (joined["p_drop_candidate"] - joined["p_drop_baseline"]).abs() / joined["p_drop_baseline"]
    )
    return joined.reset_index()


def run_simulate(config, logger, lambda_h=None, seed=None, target_arrivals=None, closed_loop=None, holding=None):
    """
    Simulate every configured policy at the configured new-call rate

    Open-loop handoff arrivals use ``lambda_h`` if given, else the flow-balanced
    rate (flow_balance true) or the configured fixed rate. Policy k uses seed + k.

    :param config: validated configuration
    :type config: GuardbandConfig
    :return: one row per policy
    :rtype: pandas DataFrame
    """
    template = config.simulate or SimTemplate()
    seed = template.seed if seed is None else seed
    target = target_arrivals or template.target_arrivals
    closed_loop = template.mode == "closed-loop" if closed_loop is None else closed_loop
    holding = holding or template.holding
    params = config.traffic()

    configs = []
    for k, policy in enumerate(config.policies):
        if closed_loop:
            mode = ClosedLoopWraparound()
        elif lambda_h is not None:
            mode = OpenLoop(lambda_h)
        elif config.flow_balance:
            mode = OpenLoop(evaluate_with_flow_balance(policy, params, mu_override=config.mu_override).lambda_h)
        else:
            mode = OpenLoop(config.lambda_h)
        configs.append(
            SimConfig(
                policy=policy,
                params=params,
                mode=mode,
                seed=(seed + k) % 2**64,
                target_arrivals=target,
                warmup_arrivals=template.warmup_arrivals,
                holding=HoldingModel(holding),
            )
        )

    outcomes = batch_simulate(configs, logger, jobs=config.jobs)
    records = []
    for sim_config, outcome in zip(configs, outcomes):
        record = {"policy": sim_config.policy.label, "alpha": sim_config.policy.alpha, "lambda_n": params.lambda_n}
        if isinstance(outcome, Exception):
            record["status"] = type(outcome).__name__
        else:
            record.update(asdict(outcome))
            record["status"] = "ok"
        records.append(record)
    return pd.DataFrame(records)
