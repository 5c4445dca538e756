""" Functions that are used by multiple scripts bundled """

import math

from guardband.helper_functions.errors import ParameterDomainError


def check_rate(value, name, allow_zero=False):
    """
    Validate a rate given in events per second

    :param value: rate to check
    :type value: float
    :param name: parameter name used in the error message
    :type name: str
    :param allow_zero: whether 0 is admissible
    :type allow_zero: bool
    :raises ParameterDomainError: if the rate is not finite or not positive
    :return: the rate as float
    :rtype: float
    """
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterDomainError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ParameterDomainError(f"{name} must be finite, got {value}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ParameterDomainError(f"{name} must be {bound}, got {value}")
    return value


def check_probability(value, name):
    """
    Validate a probability

    :param value: probability to check
    :type value: float
    :param name: parameter name used in the error message
    :type name: str
    :raises ParameterDomainError: if the value is outside [0, 1]
    :return: the probability as float
    :rtype: float
    """
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterDomainError(f"{name} must be a number, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise ParameterDomainError(f"{name} must lie in [0, 1], got {value}")
    return value


def parse_range(text):
    """
    parse a linear range given as ``start:stop:steps`` or a single value

    :param text: range description, e.g. "0.2:3.0:30" or "1.5"
    :type text: str
    :raises ValueError: if the text cannot be parsed or the range is invalid
    :return: (start, stop, steps)
    :rtype: tuple
    """
    parts = [p.strip() for p in str(text).split(":")]
    if len(parts) == 1:
        start = stop = float(parts[0])
        steps = 1
    elif len(parts) == 3:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    else:
        raise ValueError(f"expected 'start:stop:steps' or a single value, got '{text}'")

    if not start > 0:
        raise ValueError(f"range start must be > 0, got {start}")
    if stop < start:
        raise ValueError(f"range stop ({stop}) must not be below start ({start})")
    if steps < 1:
        raise ValueError(f"range steps must be >= 1, got {steps}")
    return start, stop, steps


def parse_float_list(text):
    """
    parse a comma separated list of floats, e.g. "0.1,0.5,0.9"

    :param text: comma separated values
    :type text: str
    :return: parsed values in the given order
    :rtype: list
    """
    values = [v.strip() for v in str(text).split(",") if v.strip()]
    if not values:
        raise ValueError("empty list")
    return [float(v) for v in values]


def default_alpha_grid():
    """acceptance factors 0.1 to 0.9 in steps of 0.1"""
    return [round(0.1 * k, 1) for k in range(1, 10)]
