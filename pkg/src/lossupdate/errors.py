"""Exception types raised by the library.

Every error is a ``ValueError`` subclass so callers that only care about
bad input can catch one thing.
"""


class UpdateError(ValueError):
    """Base class for all library errors."""


class EmptySupport(UpdateError):
    pass


class NegativeWeight(UpdateError):
    pass


class DuplicatePoint(UpdateError):
    pass


class SupportMismatch(UpdateError):
    pass


class NotAbsolutelyContinuous(UpdateError):
    pass


class NonNumericOutcome(UpdateError, TypeError):
    pass


class InvalidLoss(UpdateError):
    pass


class ZeroMarginal(UpdateError):
    pass


class NotIntegrable(UpdateError):
    """Every outcome with positive prior mass has infinite loss."""


class NoConvergence(UpdateError):
    """Iteration budget exhausted; ``report`` holds the last iterate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class RootNotBracketed(UpdateError):
    pass


class Infeasible(UpdateError):
    pass


class DegenerateFeasible(UserWarning):
    """Constraint bound sits exactly at the largest attainable moment."""
