""" Exceptions raised by guardband """


class GuardbandError(Exception):
    """Base class for all guardband errors"""


class ParameterDomainError(GuardbandError, ValueError):
    """A rate, threshold or probability lies outside its domain"""


class UnsupportedSizeError(GuardbandError, ValueError):
    """The requested chain is too large for a dense or closed-form oracle"""


class ConvergenceError(GuardbandError, RuntimeError):
    """
    The handoff flow-balance iteration did not settle

    :param message: human readable description
    :type message: str
    :param last_iterate: last handoff arrival rate reached
    :type last_iterate: float
    :param residual: absolute flow-balance residual at the last iterate
    :type residual: float
    :param iterations: number of map evaluations performed
    :type iterations: int
    :param alpha: acceptance factor being evaluated, if any
    :type alpha: float
    """

    def __init__(self, message, last_iterate, residual, iterations, alpha=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations
        self.alpha = alpha


class DegenerateRunError(GuardbandError, RuntimeError):
    """A simulation run has nothing to measure"""


class ConfigError(GuardbandError, ValueError):
    """
    Malformed configuration

    :param field: dotted path of the offending field, e.g. ``traffic.lambda_n``
    :type field: str
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ChartError(GuardbandError, ValueError):
    """A chart cannot be produced from the given CSV and selection"""
