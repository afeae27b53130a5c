"""Exception types shared across the package."""


class MotensorError(Exception):
    """Base class for library errors."""


class DimensionError(MotensorError, ValueError):
    """Input shape or index does not match the tensor."""


class SizeBudgetError(MotensorError):
    """Dense materialization would exceed the logical-entry budget."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class IterationLimitError(MotensorError):
    """An iterative solver hit its iteration cap; ``best`` holds the last iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConvergenceError(MotensorError):
    """No run of a multistart method converged."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class OuterBudgetError(MotensorError):
    """The dimension schedule ran out before the outer stop rule fired."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
