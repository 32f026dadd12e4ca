"""Exception hierarchy shared by every module of the package."""


class RNSemigroupError(Exception):
    """Base class for all package errors."""


class NonPositiveProbError(RNSemigroupError, ValueError):
    pass


class ProbSumMismatchError(RNSemigroupError, ValueError):
    pass


class DuplicateLabelError(RNSemigroupError, ValueError):
    pass


class EmptyFamilyError(RNSemigroupError, ValueError):
    pass


class SpaceMismatchError(RNSemigroupError, ValueError):
    pass


class GridMismatchError(RNSemigroupError, ValueError):
    pass


class NonFiniteValueError(RNSemigroupError, ValueError):
    pass


class ExponentOverflowError(RNSemigroupError, OverflowError):
    """An exponent above the overflow cap was requested.

    ``atom`` and ``node`` locate the first offending entry.
    """

    def __init__(self, message, atom=None, node=None):
        super().__init__(message)
        self.atom = atom
        self.node = node


class SingularMultiplierError(RNSemigroupError, ZeroDivisionError):
    pass


class EmptyProbeSetError(RNSemigroupError, ValueError):
    pass


class OddPanelCountError(RNSemigroupError, ValueError):
    pass


class NonFiniteSampleError(RNSemigroupError, ValueError):
    pass


class DomainViolationError(RNSemigroupError, ValueError):
    pass


class NonPositiveNormError(RNSemigroupError, ValueError):
    pass


class SingularCError(RNSemigroupError, ValueError):
    pass


class ConditionExceededError(RNSemigroupError, ValueError):
    pass


class MissingGeneratorError(RNSemigroupError, ValueError):
    pass


class HorizonMismatchError(RNSemigroupError, ValueError):
    pass


class NotDifferentiableError(RNSemigroupError, ValueError):
    pass


class LipschitzCertificateFailedError(RNSemigroupError, ValueError):
    pass


class ConfigError(RNSemigroupError, ValueError):
    pass
