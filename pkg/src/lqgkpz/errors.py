"""Exception types raised on precondition failures.

All of them derive from ``ValueError`` so callers that only care about
"bad input" can catch that.
"""


class LqgError(ValueError):
    pass


class OutOfRangeGamma(LqgError):
    pass


class UnknownDimension(LqgError):
    pass


class InvalidDimension(LqgError):
    pass


class OutOfRangeDim(LqgError):
    pass


class OutOfRangeAlpha(LqgError):
    pass


class OutOfRangeZeta(LqgError):
    pass


class OutOfRangeRho(LqgError):
    pass


class OutOfRangeS(LqgError):
    pass


class OutOfRangeT(LqgError):
    pass


class InvalidSize(LqgError):
    pass


class RadiusTooSmall(LqgError):
    pass


class OutOfDomain(LqgError):
    pass


class BadLadder(LqgError):
    pass


class BadPartition(LqgError):
    pass


class VertexOutsideRegion(LqgError):
    pass


class TooFewScales(LqgError):
    pass


class EmptySet(LqgError):
    pass


class NoSignChange(LqgError):
    pass


class ThresholdTooLarge(LqgError):
    pass


class ResolutionExhausted(LqgError):
    """A tiling descent reached single-vertex squares without meeting the threshold."""
