"""Exception hierarchy.

Input and assumption violations derive from ``ValidationError`` (also a
``ValueError``); numerical failures derive from ``NumericalError``.
"""


class DIRateError(Exception):
    """Base class for all package errors."""


class ValidationError(DIRateError, ValueError):
    pass


class Unstable(ValidationError):
    pass


class NoiseNotPD(ValidationError):
    pass


class BadPartition(ValidationError):
    pass


class BadIndex(ValidationError):
    pass


class WindowTooLong(ValidationError):
    pass


class DegenerateData(ValidationError):
    pass


class EmptyY(ValidationError):
    pass


class BadRule(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class NumericalError(DIRateError, ArithmeticError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class LeadingBlockSingular(NotPositiveDefinite):
    """Leading block of an empirical block covariance failed Cholesky.

    Usually means too little data for the chosen lag order, or degenerate
    (collinear / constant) input.
    """


class GramSingular(NotPositiveDefinite):
    pass


class InnovationSingular(NumericalError):
    pass


class SingularAtFrequency(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap
