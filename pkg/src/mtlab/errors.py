"""Exception types raised across the package.

Every error derives from :class:`MtlabError` so the command line runner can
map library failures to exit codes without catching unrelated bugs.
"""


class MtlabError(Exception):
    """Base class for all library errors."""


class ValidationError(MtlabError, ValueError):
    """Bad physical parameters or preconditions supplied by the caller."""


class OutOfDomain(ValidationError):
    pass


class NearZeroWarp(MtlabError):
    pass


class WrongTopology(ValidationError):
    pass


class NonFiniteIntegrand(MtlabError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DegenerateGrid(ValidationError):
    pass


class CurvatureTooLarge(ValidationError):
    pass


class NonPositive(ValidationError):
    pass


class NegativeRadicand(ValidationError):
    pass


class EpsTooLarge(ValidationError):
    pass


class StepUnderflow(MtlabError):
    pass


class OutOfRegime(ValidationError):
    pass


class TruncationTooShort(ValidationError):
    pass


class NoConvergence(MtlabError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConstantFunction(ValidationError):
    pass


class NoVariation(ValidationError):
    pass


class DiskTooSmall(ValidationError):
    pass


class InfiniteVolume(ValidationError):
    pass


class MedianDegenerate(MtlabError):
    pass


class Overflow(MtlabError):
    """exp(alpha u^2) would overflow; carries the offending node and the partial sum."""

    def __init__(self, message, node=None, partial=None, context=None):
        super().__init__(message)
        self.node = node
        self.partial = partial
        self.context = context


class PreconditionViolated(ValidationError):
    pass


class NotMonotone(ValidationError):
    pass


class ConstraintViolated(ValidationError):
    pass


class InsufficientRange(ValidationError):
    pass
