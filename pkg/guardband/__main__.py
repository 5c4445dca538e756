"""Command line interface guardband."""

import json
import logging
import sys
from dataclasses import replace

import click

import guardband
from guardband.analysis import PolicyKind
from guardband.helper_functions import (
    ChartError,
    ConfigError,
    ConvergenceError,
    parse_float_list,
    parse_range,
)
from guardband.helper_functions import config as guardband_config
from guardband.report_scripts import (
    SweepSpec,
    compare_policies,
    lambda_grid,
    list_series,
    optimum_path,
    render_chart,
    run_alpha_scan,
    run_simulate,
    run_solve,
    run_sweep,
    series_name,
    write_csv,
)
from guardband.simulation import HoldingModel

# Create logger
logger = logging.getLogger("Guardband")
# Create console handler
ch = logging.StreamHandler()
# Create formatter
formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
ch.setFormatter(formatter)
# add ch to logger
logger.addHandler(ch)
logger.setLevel(logging.INFO)
logger.propagate = False


class EnumType(click.Choice):
    """
    This is a class for a click.Choice of type EnumType

    """

    def __init__(self, enum, case_sensitive=False):
        self.__enum = enum
        super().__init__(choices=[item.value for item in enum], case_sensitive=case_sensitive)

    def convert(self, value, param, ctx):
        converted_str = super().convert(value, param, ctx)
        return self.__enum(converted_str)


def expand_alpha(policies, alphas):
    """
    Replace every acceptance-guard policy by one copy per acceptance factor

    :param policies: configured policies
    :type policies: list
    :param alphas: acceptance factors
    :type alphas: list
    :return: policies, acceptance-guard entries expanded in place
    :rtype: list
    """
    expanded = []
    for policy in policies:
        if policy.kind is PolicyKind.ACCEPTANCE_GUARD:
            expanded.extend(policy.with_alpha(alpha) for alpha in alphas)
        else:
            expanded.append(policy)
    return expanded


def get_config(config_path, alpha=None, flow_balance=None, mu_override=None, jobs=None):
    """
    Resolve, load and override the configuration; config problems become usage errors

    :param config_path: --config value, may be None
    :type config_path: str
    :param alpha: --alpha value (comma separated)
    :type alpha: str
    :raises click.UsageError: naming the offending field
    :return: configuration
    :rtype: GuardbandConfig
    """
    try:
        path = guardband_config.resolve_config_path(config_path, logger)
        config = guardband_config.load_config(path, logger)
        alphas = parse_alpha_option(alpha)
        if alphas is not None:
            config = replace(config, alpha_grid=alphas, policies=expand_alpha(config.policies, alphas))
        return config.override(flow_balance=flow_balance, mu_override=mu_override, jobs=jobs)
    except ConfigError as err:
        raise click.UsageError(f"invalid configuration: {err}")
    except ValueError as err:
        raise click.UsageError(str(err))


def parse_alpha_option(alpha):
    if alpha is None:
        return None
    try:
        alphas = parse_float_list(alpha)
    except ValueError as err:
        raise click.BadParameter(f"'{alpha}': {err}", param_hint="--alpha")
    bad = [a for a in alphas if not 0.0 <= a <= 1.0]
    if bad:
        raise click.BadParameter(f"acceptance factors must lie in [0, 1], got {bad}", param_hint="--alpha")
    return alphas


def parse_lambda_option(lambda_n):
    if lambda_n is None:
        return None
    try:
        return parse_range(lambda_n)
    except ValueError as err:
        raise click.BadParameter(str(err), param_hint="--lambda-n")


def log_policy_comparison(frame, policies):
    """report blocking dominance and dropping margin of each guard policy against its bounding baseline"""
    names = list(dict.fromkeys(series_name(p, a) for p, a in zip(frame["policy"], frame["alpha"])))
    for baseline in (p for p in policies if p.kind is PolicyKind.NEW_CALL_BOUNDING):
        for candidate in (p for p in policies if p.kind is PolicyKind.ACCEPTANCE_GUARD and p.m == baseline.m):
            name = series_name(candidate.label, candidate.alpha)
            if baseline.label not in names or name not in names:
                continue
            comparison = compare_policies(frame, baseline.label, name)
            lower = bool((comparison["p_block_candidate"] < comparison["p_block_baseline"]).all())
            logger.info(
                f"{name} vs {baseline.label}: blocking lower at every point: {lower}; "
                f"max relative dropping margin {comparison['dropping_rel_margin'].max():.4g}"
            )


def render_all(csv_path, chart_path, metrics):
    """render every series of a freshly written CSV; failures are logged and reported as False"""
    try:
        render_chart(csv_path, list_series(csv_path), chart_path, logger, metrics=metrics)
        return True
    except (ChartError, OSError, ValueError) as err:
        logger.error(f"Chart rendering failed: {err}")
        return False


def run_guardband():
    click.echo("                                 __                    __", err=True)
    click.echo("   ____ ___  ______ __________  / /_  ____ _____  ____/ /", err=True)
    click.echo("  / __ `/ / / / __ `/ ___/ __ \\/ __ \\/ __ `/ __ \\/ __  /", err=True)
    click.echo(" / /_/ / /_/ / /_/ / /  / /_/ / /_/ / /_/ / / / / /_/ /", err=True)
    click.echo(" \\__, /\\__,_/\\__,_/_/   \\__,_/_.___/\\__,_/_/ /_/\\__,_/", err=True)
    click.echo("/____/\n", err=True)

    # Launch the click cli
    guardband_cli()


@click.group()
@click.version_option(version=guardband.__version__)
def guardband_cli():
    """
    guardband is a command-line tool to analyse guard-band call admission
    control in cellular networks: blocking and dropping probabilities, handoff
    flow balance, acceptance factor scans and simulation cross-checks.
    """

    logger.info("Start")


config_option = click.option(
    "-c",
    "--config",
    "config_path",
    help=f"Path to a YAML configuration. Relative paths are also looked up in ${guardband_config.CONFIG_DIR_ENV}.",
    type=click.STRING,
    default=None,
)
lambda_option = click.option(
    "-l",
    "--lambda-n",
    "lambda_n",
    help="New-call arrival rate in calls/s, either a single value or start:stop:steps",
    type=click.STRING,
    default=None,
)
alpha_option = click.option(
    "-a",
    "--alpha",
    help="Comma separated acceptance factors, e.g. '0.1,0.5,0.9'",
    type=click.STRING,
    default=None,
)
flow_balance_option = click.option(
    "-f",
    "--flow-balance",
    help="Solve the handoff flow balance (true) or use the configured lambda_h (false)",
    type=click.BOOL,
    default=None,
)
mu_override_option = click.option(
    "--mu-override",
    help="Channel departure rate replacing mu_a + eta",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
)
seed_option = click.option(
    "-s",
    "--seed",
    help="Master seed of the simulation streams",
    type=click.IntRange(0, 2**64 - 1),
    default=None,
)
jobs_option = click.option(
    "-j",
    "--jobs",
    help="Worker processes used for sweep points",
    type=click.IntRange(min=1),
    default=None,
)


# guardband solve
@guardband_cli.command()
@config_option
@lambda_option
@alpha_option
@flow_balance_option
@mu_override_option
def solve(config_path, lambda_n, alpha, flow_balance, mu_override):
    """Print blocking, dropping and the handoff fixed point for every configured policy."""
    config = get_config(config_path, alpha, flow_balance, mu_override)
    lambda_range = parse_lambda_option(lambda_n)

    try:
        records = run_solve(config, logger, lambda_grid(lambda_range) if lambda_range else None)
    except ConfigError as err:
        raise click.UsageError(f"invalid configuration: {err}")
    except ConvergenceError as err:
        logger.error(f"{err} (last iterate {err.last_iterate:.12g}, residual {err.residual:.3e})")
        sys.exit(1)

    for record in records:
        click.echo(json.dumps(record))


# guardband sweep
@guardband_cli.command()
@config_option
@click.option("-o", "--out", help="CSV output path", type=click.STRING, default=None)
@click.option("--chart", help="Optional chart output path (.svg)", type=click.STRING, default=None)
@lambda_option
@alpha_option
@flow_balance_option
@seed_option
@jobs_option
@mu_override_option
def sweep(config_path, out, chart, lambda_n, alpha, flow_balance, seed, jobs, mu_override):
    """Evaluate every configured policy over a range of new-call rates and write a CSV."""
    config = get_config(config_path, alpha, flow_balance, mu_override, jobs)
    spec = build_spec(config, out, chart, lambda_n, seed)

    try:
        outcome = run_sweep(spec, logger)
    except OSError as err:
        logger.error(f"Cannot write {spec.output}: {err}")
        sys.exit(1)
    log_policy_comparison(outcome.frame, spec.policies)

    charted = render_all(spec.output, spec.chart, ("p_block", "p_drop")) if spec.chart else True
    if not outcome.all_ok or not charted:
        sys.exit(1)


# guardband alpha-scan
@guardband_cli.command(name="alpha-scan")
@config_option
@click.option("-o", "--out", help="CSV output path", type=click.STRING, default=None)
@click.option("--chart", help="Optional chart output path (.svg)", type=click.STRING, default=None)
@lambda_option
@alpha_option
@flow_balance_option
@seed_option
@jobs_option
@mu_override_option
def alpha_scan(config_path, out, chart, lambda_n, alpha, flow_balance, seed, jobs, mu_override):
    """Scan acceptance factors at every new-call rate and report the blocking-minimizing one."""
    config = get_config(config_path, None, flow_balance, mu_override, jobs)
    alphas = parse_alpha_option(alpha) or config.alpha_grid
    spec = build_spec(config, out, chart, lambda_n, seed)

    try:
        outcome = run_alpha_scan(spec, alphas, logger)
    except ConfigError as err:
        raise click.UsageError(f"invalid configuration: {err}")
    except OSError as err:
        logger.error(f"Cannot write {spec.output}: {err}")
        sys.exit(1)

    click.echo(outcome.summary.to_json(orient="records", lines=True, double_precision=15).rstrip("\n"))
    click.echo(json.dumps({"crossover_lambda_n": outcome.crossover, "alpha_max": max(alphas)}))
    logger.info(f"Optimum summary written to {optimum_path(spec.output)}")

    charted = render_all(spec.output, spec.chart, ("p_block",)) if spec.chart else True
    if not outcome.all_ok or not charted:
        sys.exit(1)


def build_spec(config, out, chart, lambda_n, seed):
    """sweep description from configuration and command line overrides"""
    spec = SweepSpec.from_config(config, output=out, chart=chart)
    lambda_range = parse_lambda_option(lambda_n)
    if lambda_range is not None:
        spec = replace(spec, lambda_range=lambda_range)
    if seed is not None:
        if spec.simulate is None:
            logger.warning("--seed has no effect: the configuration has no simulate section")
        else:
            spec = replace(spec, simulate=replace(spec.simulate, seed=seed))
    if not spec.output:
        raise click.UsageError("No output path. Use --out or set output.csv in the configuration.")
    return spec


# guardband simulate
@guardband_cli.command()
@config_option
@click.option("-o", "--out", help="Optional CSV output path", type=click.STRING, default=None)
@seed_option
@click.option(
    "-l", "--lambda-n", "lambda_n", help="New-call arrival rate in calls/s", type=click.FloatRange(min=0), default=None
)
@click.option(
    "--lambda-h",
    help="Open-loop handoff arrival rate; defaults to the flow-balanced rate",
    type=click.FloatRange(min=0),
    default=None,
)
@click.option("-n", "--target", help="Measured new-call arrivals", type=click.IntRange(min=1), default=None)
@click.option(
    "-m",
    "--mode",
    help="Open loop (Poisson handoffs) or closed-loop wraparound",
    type=click.Choice(["open-loop", "closed-loop"]),
    default=None,
)
@click.option("--holding", help="Holding time model", type=EnumType(HoldingModel), default=None)
@alpha_option
@jobs_option
def simulate(config_path, out, seed, lambda_n, lambda_h, target, mode, holding, alpha, jobs):
    """Simulate every configured policy and print empirical blocking and dropping."""
    config = get_config(config_path, alpha, jobs=jobs)
    if lambda_n is not None:
        config = replace(config, lambda_n=lambda_n)

    try:
        frame = run_simulate(
            config,
            logger,
            lambda_h=lambda_h,
            seed=seed,
            target_arrivals=target,
            closed_loop=None if mode is None else mode == "closed-loop",
            holding=holding.value if holding is not None else None,
        )
    except ConfigError as err:
        raise click.UsageError(f"invalid configuration: {err}")
    except ConvergenceError as err:
        logger.error(str(err))
        sys.exit(1)

    click.echo(frame.to_json(orient="records", lines=True, double_precision=15).rstrip("\n"))
    if out:
        try:
            write_csv(frame, out, logger)
        except OSError as err:
            logger.error(f"Cannot write {out}: {err}")
            sys.exit(1)
    if not (frame["status"] == "ok").all():
        sys.exit(1)


# guardband chart
@guardband_cli.command()
@click.option(
    "-i", "--csv", "csv_path", help="CSV written by sweep or alpha-scan", required=True, type=click.Path(exists=True)
)
@click.option("-o", "--out", help="Chart output path (.svg)", required=True, type=click.STRING)
@click.option("--series", help="Series to plot (repeatable), e.g. 'new-call-bounding[m=100]'", multiple=True)
@click.option(
    "--metric", help="Probability to plot (repeatable)", type=click.Choice(["p_block", "p_drop"]), multiple=True
)
@click.option("--log/--linear", "log_scale", help="Logarithmic probability axis", default=True, show_default=True)
def chart(csv_path, out, series, metric, log_scale):
    """Render selected series of a sweep CSV as a line chart."""
    if not series:
        raise click.UsageError("No series selected. Use --series (repeatable).")
    try:
        render_chart(csv_path, series, out, logger, metrics=tuple(metric) or ("p_block",), log_scale=log_scale)
    except ChartError as err:
        raise click.UsageError(str(err))
    except (OSError, ValueError) as err:
        logger.error(f"Chart rendering failed: {err}")
        sys.exit(1)


if __name__ == "__main__":
    run_guardband()
