""" Load and validate experiment configurations (YAML) """

import os
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import yaml

from guardband.analysis.schemes import AdmissionPolicy, PolicyKind
from guardband.analysis.traffic import TrafficParams
from guardband.helper_functions.errors import ConfigError, ParameterDomainError
from guardband.helper_functions.helper_functions import (
    check_probability,
    check_rate,
    default_alpha_grid,
)

CONFIG_DIR_ENV = "GUARDBAND_CONFIG_DIR"
DEFAULT_CONFIG_NAME = "guardband.yaml"
PRESET_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "presets", "reference.yaml")


@dataclass(frozen=True)
class SimTemplate:
    """simulation settings applied to every cross-validation point"""

    mode: str = "open-loop"
    target_arrivals: int = 200_000
    warmup_arrivals: Optional[int] = None
    seed: int = 1
    holding: str = "aggregate"


@dataclass(frozen=True)
class GuardbandConfig:
    """
    Validated experiment configuration. ``lambda_n`` may be None for files
    that only describe sweeps.
    """

    channels: int
    mu_a: float
    eta: float
    policies: List[AdmissionPolicy]
    lambda_n: Optional[float] = None
    mu_override: Optional[float] = None
    flow_balance: bool = True
    lambda_h: float = 0.0
    alpha_grid: List[float] = field(default_factory=default_alpha_grid)
    sweep: Tuple[float, float, int] = (0.2, 3.0, 30)
    simulate: Optional[SimTemplate] = None
    output_csv: Optional[str] = None
    output_chart: Optional[str] = None
    jobs: int = 1

    def traffic(self, lambda_n=None):
        """
        Traffic parameters at the given (or configured) new-call rate

        :raises ConfigError: if no new-call rate is available
        """
        lambda_n = self.lambda_n if lambda_n is None else lambda_n
        if lambda_n is None:
            raise ConfigError("traffic.lambda_n", "required for this command")
        return TrafficParams(lambda_n=lambda_n, mu_a=self.mu_a, eta=self.eta)

    def override(self, **changes):
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def resolve_config_path(path, logger):
    """
    Find the configuration file to use

    A missing relative path is looked up in $GUARDBAND_CONFIG_DIR. Without a
    path, $GUARDBAND_CONFIG_DIR/guardband.yaml is used if present, else the
    shipped reference preset.

    :param path: path given on the command line, may be None
    :type path: str
    :raises ConfigError: if the file cannot be found
    :return: path of an existing file
    :rtype: str
    """
    config_dir = os.environ.get(CONFIG_DIR_ENV)
    if path is None:
        if config_dir and os.path.isfile(os.path.join(config_dir, DEFAULT_CONFIG_NAME)):
            path = os.path.join(config_dir, DEFAULT_CONFIG_NAME)
        else:
            path = PRESET_PATH
        logger.info(f"Using configuration {path}")
        return path

    if os.path.isfile(path):
        return path
    if config_dir and not os.path.isabs(path) and os.path.isfile(os.path.join(config_dir, path)):
        return os.path.join(config_dir, path)
    raise ConfigError("config", f"file '{path}' not found")


def load_config(path, logger):
    """
    Read and validate a YAML configuration

    :param path: configuration file
    :type path: str
    :raises ConfigError: naming the offending field
    :return: validated configuration
    :rtype: GuardbandConfig
    """
    logger.info(f"Reading configuration ({os.path.basename(path)})")
    try:
        with open(path, "r") as config_file:
            raw = yaml.safe_load(config_file)
    except yaml.YAMLError as err:
        raise ConfigError("config", f"not valid YAML: {err}")
    return parse_config(raw or {})


def parse_config(raw):
    """
    Validate an already parsed configuration mapping

    :param raw: parsed YAML document
    :type raw: dict
    :raises ConfigError: naming the offending field
    :return: validated configuration
    :rtype: GuardbandConfig
    """
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a mapping")

    channels = _integer(raw, "channels", "channels", minimum=1)
    traffic = _section(raw, "traffic")
    mu_a = _rate_or_mean(traffic, "mu_a", "call_mean_s")
    eta = _rate_or_mean(traffic, "eta", "dwell_mean_s")

    lambda_n = traffic.get("lambda_n")
    if lambda_n is not None:
        lambda_n = _checked("traffic.lambda_n", check_rate, lambda_n, "lambda_n", allow_zero=True)
    mu_override = traffic.get("mu_override")
    if mu_override is not None:
        mu_override = _checked("traffic.mu_override", check_rate, mu_override, "mu_override")

    flow_balance = raw.get("flow_balance", True)
    if not isinstance(flow_balance, bool):
        raise ConfigError("flow_balance", f"must be true or false, got {flow_balance!r}")
    lambda_h = _checked("lambda_h", check_rate, raw.get("lambda_h", 0.0), "lambda_h", allow_zero=True)

    policies = [_policy(entry, channels, f"policies[{k}]") for k, entry in enumerate(raw.get("policies") or [])]
    if not policies:
        raise ConfigError("policies", "at least one policy is required")

    alpha_grid = raw.get("alpha_grid")
    if alpha_grid is None:
        alpha_grid = default_alpha_grid()
    elif not isinstance(alpha_grid, list) or not alpha_grid:
        raise ConfigError("alpha_grid", "must be a non-empty list")
    alpha_grid = [_checked(f"alpha_grid[{k}]", check_probability, a, "alpha") for k, a in enumerate(alpha_grid)]

    sweep = _sweep(_section(raw, "sweep", required=False))
    simulate = _sim_template(raw.get("simulate"))
    output = _section(raw, "output", required=False)
    jobs = _integer(raw, "jobs", "jobs", minimum=1, default=1)

    return GuardbandConfig(
        channels=channels,
        mu_a=mu_a,
        eta=eta,
        policies=policies,
        lambda_n=lambda_n,
        mu_override=mu_override,
        flow_balance=flow_balance,
        lambda_h=lambda_h,
        alpha_grid=alpha_grid,
        sweep=sweep,
        simulate=simulate,
        output_csv=output.get("csv"),
        output_chart=output.get("chart"),
        jobs=jobs,
    )


# ============================================================================ #
#                                FIELD PARSERS
# ============================================================================ #


def _checked(field_path, check, *args, **kwargs):
    try:
        return check(*args, **kwargs)
    except ParameterDomainError as err:
        raise ConfigError(field_path, str(err))


def _section(raw, name, required=True):
    section = raw.get(name)
    if section is None:
        if required:
            raise ConfigError(name, "section is missing")
        return {}
    if not isinstance(section, dict):
        raise ConfigError(name, "must be a mapping")
    return section


def _integer(raw, key, field_path, minimum=0, default=None):
    value = raw.get(key, default)
    if value is None:
        raise ConfigError(field_path, "is required")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field_path, f"must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(field_path, f"must be >= {minimum}, got {value}")
    return value


def _rate_or_mean(traffic, rate_key, mean_key):
    has_rate, has_mean = rate_key in traffic, mean_key in traffic
    if has_rate == has_mean:
        raise ConfigError(f"traffic.{rate_key}", f"give exactly one of '{rate_key}' or '{mean_key}'")
    if has_rate:
        return _checked(f"traffic.{rate_key}", check_rate, traffic[rate_key], rate_key)
    return 1.0 / _checked(f"traffic.{mean_key}", check_rate, traffic[mean_key], mean_key)


def _policy(entry, channels, field_path):
    if not isinstance(entry, dict):
        raise ConfigError(field_path, "must be a mapping with a 'kind'")
    try:
        kind = PolicyKind(entry.get("kind"))
    except ValueError:
        choices = ", ".join(k.value for k in PolicyKind)
        raise ConfigError(f"{field_path}.kind", f"must be one of {choices}, got {entry.get('kind')!r}")

    unknown = set(entry) - {"kind", "m", "n", "alpha"}
    if unknown:
        raise ConfigError(f"{field_path}.{sorted(unknown)[0]}", "unknown field")
    try:
        return AdmissionPolicy(c=channels, kind=kind, m=entry.get("m"), n=entry.get("n"), alpha=entry.get("alpha"))
    except ParameterDomainError as err:
        raise ConfigError(field_path, str(err))


def _sweep(section):
    start = section.get("start", 0.2)
    stop = section.get("stop", 3.0)
    steps = _integer(section, "steps", "sweep.steps", minimum=1, default=30)
    start = _checked("sweep.start", check_rate, start, "start")
    stop = _checked("sweep.stop", check_rate, stop, "stop")
    if stop < start:
        raise ConfigError("sweep.stop", f"must not be below start ({start}), got {stop}")
    return (start, stop, steps)


def _sim_template(section):
    if section is None:
        return None
    if not isinstance(section, dict):
        raise ConfigError("simulate", "must be a mapping")
    mode = section.get("mode", "open-loop")
    if mode not in ("open-loop", "closed-loop"):
        raise ConfigError("simulate.mode", f"must be 'open-loop' or 'closed-loop', got {mode!r}")
    holding = section.get("holding", "aggregate")
    if holding not in ("aggregate", "competing"):
        raise ConfigError("simulate.holding", f"must be 'aggregate' or 'competing', got {holding!r}")
    warmup = section.get("warmup_arrivals")
    if warmup is not None:
        warmup = _integer(section, "warmup_arrivals", "simulate.warmup_arrivals")
    return SimTemplate(
        mode=mode,
        target_arrivals=_integer(section, "target_arrivals", "simulate.target_arrivals", minimum=1, default=200_000),
        warmup_arrivals=warmup,
        seed=_integer(section, "seed", "simulate.seed", default=1),
        holding=holding,
    )
