class EgkError(Exception):
    """Base class for all errors raised by the egk package"""


class DomainError(EgkError, ValueError):
    """An argument or a parameter record lies outside its admissible range"""


class DivergenceError(EgkError):
    """The requested integral diverges for the given arguments"""


class AccuracyError(EgkError):
    """
    Numerical quadrature did not reach the requested tolerance.
    @param value The best estimate that was reached
    @param err The estimated absolute error of that estimate
    """

    def __init__(self, message: str, value: float, err: float):
        super(AccuracyError, self).__init__(message)
        self.value = value
        self.err = err


class ConvergenceError(EgkError):
    """An iterative evaluation (contour doubling, series) did not converge"""


class SeriesTermError(ConvergenceError):
    """A single term of a truncated series could not be evaluated"""

    def __init__(self, message: str, n: int):
        super(SeriesTermError, self).__init__(f"term n={n}: {message}")
        self.n = n


class SpecError(EgkError):
    """A Fox-H specification or contour violates pole separation"""


class UnknownPresetError(EgkError, KeyError):
    def __init__(self, name: str, available):
        self.name = name
        self.available = sorted(available)
        super(UnknownPresetError, self).__init__(
            f"unknown preset '{name}', available presets: {', '.join(self.available)}"
        )

    def __str__(self):
        return self.args[0]


class ConfigError(EgkError):
    """A configuration file or catalog could not be loaded or validated"""
