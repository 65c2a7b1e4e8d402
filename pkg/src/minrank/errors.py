class MinRankError(Exception):
    """Base class for all errors raised by this package."""


class InvalidField(MinRankError, ValueError):
    pass


class ZeroInverse(MinRankError, ZeroDivisionError):
    pass


class DimensionMismatch(MinRankError, ValueError):
    pass


class IndexOutOfRange(MinRankError, IndexError):
    pass


class InvalidSplit(MinRankError, ValueError):
    pass


class RandomnessExhausted(MinRankError):
    """A rejection sampler ran out of attempts."""


class InvalidParams(MinRankError, ValueError):
    pass


class MalformedKey(MinRankError, ValueError):
    pass


class InternalInconsistency(MinRankError):
    """A secret key regenerated a singular system; the key is corrupt."""


class RetryLimitExceeded(MinRankError):
    pass


class InvalidRank(MinRankError, ValueError):
    pass


class NonPositiveInput(MinRankError, ValueError):
    pass


class InvalidKindParams(MinRankError, ValueError):
    pass


class TooLarge(MinRankError, ValueError):
    pass


class InsufficientSamples(MinRankError):
    pass
