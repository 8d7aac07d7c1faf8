"""Exception hierarchy shared by all modules."""


class BDGError(Exception):
    """Base class for library errors."""


class InvalidWeights(BDGError):
    pass


class DivergentSeries(BDGError):
    pass


class NotAdmissible(BDGError):
    pass


class NotCritical(BDGError):
    pass


class NonConvergence(BDGError):
    pass


class NodeCapExceeded(BDGError):
    pass


class RetryBudgetExhausted(BDGError):
    """Raised when a rejection loop gives up.

    ``attempts`` and ``accepted`` let callers estimate the acceptance rate.
    """

    def __init__(self, message, attempts=0, accepted=0):
        super().__init__(message)
        self.attempts = attempts
        self.accepted = accepted

    @property
    def acceptance_rate(self):
        return self.accepted / self.attempts if self.attempts else 0.0


class AddressNotFound(BDGError):
    pass


class InvalidTree(BDGError):
    pass


class NotTypeOne(BDGError):
    pass


class BadPosition(BDGError):
    pass


class BoundTooLarge(BDGError):
    pass


class InsufficientSamples(BDGError):
    pass


class NonUniqueMinimum(BDGError):
    pass


class MismatchReport(BDGError):
    """Exact comparison failed; ``offending`` lists the mismatching keys."""

    def __init__(self, message, offending=()):
        super().__init__(message)
        self.offending = list(offending)
