"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter violates a documented precondition."""


class OutOfValidityError(ArithmeticError):
    """A formula was evaluated outside the region where it is a valid bound.

    Kept apart from :class:`InvalidParameterError` so sweeps can record the
    point and continue instead of aborting.
    """


class NumericFailureError(RuntimeError):
    """An iterative solver did not converge.

    Attributes:
        bracket: the last ``(lo, hi)`` interval the solver held.
    """

    def __init__(self, message, bracket):
        super().__init__(f"{message} (last bracket {bracket!r})")
        self.bracket = bracket
