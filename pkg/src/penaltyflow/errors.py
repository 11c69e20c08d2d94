"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class PreconditionError(ParameterError):
    """An operation was invoked on an instance lacking the required structure."""


class ConvergenceFailure(RuntimeError):
    """An iterative solver did not reach the requested tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DivergenceError(RuntimeError):
    """A trajectory left the trust region (state norm blew up)."""

    def __init__(self, message, step_index=None, norm=None):
        super().__init__(message)
        self.step_index = step_index
        self.norm = norm


class UnsupportedInstanceError(RuntimeError):
    """The instance is outside the structural class a routine can handle."""


class MetricUndefinedError(ValueError):
    """A quality metric is undefined for the given inputs."""


class FormatError(ValueError):
    """Malformed file content (PGM/CSV headers, unsupported variants)."""


class ConfigError(ValueError):
    """Invalid experiment configuration; carries the offending field path."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
