"""Exception types shared across the package.

Plain ValueError/TypeError/KeyError are used for argument mistakes; the
classes here mark failures that deserve their own catch sites.
"""


class ConfigurationError(ValueError):
    """A run configuration or guard check failed before any computation."""


class ShapeError(ValueError):
    """Two objects that must share a discretization do not."""


class NumericalError(RuntimeError):
    """A numerical routine could not produce a trustworthy result."""


class DivergenceError(NumericalError):
    """A time stepper produced non-finite values; carries the step index."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step
