"""Exception hierarchy shared by every module.

The CLI maps these onto exit statuses: usage problems exit 2, observations
that no key can explain exit 3, refused enumerations exit 4.
"""


class ChaosCryptError(Exception):
    """Base class for all errors raised by chaoscrypt."""


class UsageError(ChaosCryptError, ValueError):
    """A precondition on the arguments was violated."""


class PrecisionMismatch(UsageError):
    """Operands live on different dyadic grids."""


class RangeError(ChaosCryptError, ArithmeticError):
    """A fixed-point result left the unit interval."""

    def __init__(self, operation: str, message: str):
        super().__init__(f"{operation}: {message}")
        self.operation = operation


class InconsistentModelError(ChaosCryptError):
    """The observed keystream cannot come from any key under the assumed map and encoder."""


class RefusalError(ChaosCryptError):
    """An exhaustive enumeration would exceed its configured budget.

    ``count`` is the number of points that would have been enumerated and
    ``cap`` the budget. ``more_symbols`` is set by the attack to an estimate of
    how many extra keystream symbols would bring the count under the cap.
    """

    def __init__(self, message: str, count: int, cap: int, more_symbols: int | None = None):
        super().__init__(message)
        self.count = count
        self.cap = cap
        self.more_symbols = more_symbols


class BackwardFrontierError(RefusalError):
    """Backward iteration produced more candidates than the frontier cap allows."""
