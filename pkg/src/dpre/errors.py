"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid run configuration (bad field value, unknown law, ...)."""


class NumericsError(RuntimeError):
    """A computation failed to reach its accuracy or stability contract."""


class RootBracketError(NumericsError):
    """A root finder could not bracket a solution under the given truncation."""


class ConvergenceError(NumericsError):
    """A series or iteration did not converge to the requested tolerance."""


class StabilityAlarm(NumericsError):
    """An internal consistency check (e.g. marginal normalization) tripped."""
