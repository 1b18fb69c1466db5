"""Exception types shared across the toolkit."""


class ShapeError(ValueError):
    """Raised when matrix, vector or mask dimensions are incompatible."""


class CapacityError(ValueError):
    """Raised when an exhaustive routine is asked for more items than it can enumerate."""


class DomainError(ValueError):
    """Raised when a parameter lies outside the range where a formula is defined."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative routine exhausts its budget.

    The last estimate is kept on ``estimate`` so callers can still use it.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
