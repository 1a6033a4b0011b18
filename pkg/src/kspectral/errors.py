"""Exception types raised across the package."""


class KSpectralError(Exception):
    """Base class for all package errors."""


class InputError(KSpectralError, ValueError):
    """Malformed or out-of-range input (bad dims, non-finite entries)."""


class NumericError(KSpectralError):
    """A numeric or geometric precondition failed."""


class NotHermitian(NumericError):
    pass


class NoConvergence(NumericError):
    pass


class Singular(NumericError):
    pass


class NotPositiveDefinite(NumericError):
    pass


class GridMismatch(InputError):
    pass


class NearPole(NumericError):
    pass


class PoleOnSpectrum(NumericError):
    pass


class ZeroFunction(NumericError):
    pass


class RegionViolation(NumericError):
    pass


class NotContraction(NumericError):
    pass


class BadCurve(InputError):
    pass


class TooCloseToBoundary(NumericError):
    pass


class ContourThroughSpectrum(NumericError):
    pass


class OverlapError(InputError):
    pass
