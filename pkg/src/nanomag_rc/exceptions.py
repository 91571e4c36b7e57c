"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """A layout, protocol or experiment configuration is invalid."""


class LayoutParseError(ConfigurationError):
    """A layout file could not be parsed.

    The message carries the 1-based line number of the offending record.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class IntegrationDivergedError(RuntimeError):
    """The LLG integrator produced a non-finite magnetization."""

    def __init__(self, magnet_index, time):
        self.magnet_index = magnet_index
        self.time = time
        super().__init__(
            f"integration diverged: magnet {magnet_index} non-finite at t={time:.6e} s"
        )


class RankDeficiencyError(ArithmeticError):
    """The unregularized ridge system is singular; use lambda > 0."""


class CalibrationError(RuntimeError):
    """No candidate drive in the search bounds saturates the input magnet."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)
