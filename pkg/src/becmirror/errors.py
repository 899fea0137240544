"""Exception hierarchy shared by the numerical modules and the CLI."""


class BecMirrorError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(BecMirrorError, ValueError):
    """An input lies outside the domain of the operation."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ConvergenceError(BecMirrorError, ArithmeticError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class IntegrationDiverged(BecMirrorError, ArithmeticError):
    """The integrator produced a non-finite state or could not take a step.

    ``last_state`` holds the last finite state reached, when one is known.
    """

    def __init__(self, message: str, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class EmptyShellError(BecMirrorError, ValueError):
    """No configuration with V(q, Q) <= E was found in the sampling box."""


class ConfigError(BecMirrorError, ValueError):
    """Experiment configuration could not be parsed or validated."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key
