"""Exception hierarchy.

The CLI maps these onto stable exit codes (see ``cli.EXIT_CODES``).
"""


class SidebandThermoError(Exception):
    """Base class for all package errors."""


class ParameterError(SidebandThermoError, ValueError):
    """A device or drive parameter violates its invariants."""


class ConfigError(SidebandThermoError):
    """Malformed or incomplete run configuration."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class DomainError(SidebandThermoError, ValueError):
    """A formula was called outside the regime it is derived for."""


class SolverError(SidebandThermoError, RuntimeError):
    """Internal numerical failure (root finding, bracketing)."""


class EstimatorError(SidebandThermoError, ValueError):
    """An inverse estimate cannot be formed from the supplied data."""


class RatioOutOfRangeError(EstimatorError):
    pass


class TemperatureOverflowError(EstimatorError):
    pass


class FitError(EstimatorError):
    """Lorentzian fit failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class WindowError(EstimatorError):
    """Fit window is unusable (too few samples, peak on the edge, ...)."""


class PipelineError(SidebandThermoError):
    """Wraps the first failing stage of ``experiment.run_pipeline``."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"pipeline stage '{stage}' failed: {cause}")
