"""Exception types raised across the package.

Data problems (bad shapes, bad files, bad configs) derive from ``GflError``
so the CLI can map them to a single exit code.
"""


class GflError(ValueError):
    pass


class UnsupportedFormat(GflError):
    pass


class CorruptData(GflError):
    pass


class InvalidImage(GflError):
    pass


class DimensionMismatch(GflError):
    pass


class DimensionNotDivisible(GflError):
    pass


class OddDimensions(GflError):
    pass


class DepthTooLarge(GflError):
    pass


class ImageTooSmall(GflError):
    pass


class AsymmetricSpectrum(GflError):
    pass


class InvalidConfig(GflError):
    pass


class EpochOutOfOrder(GflError):
    pass


class NonFiniteLoss(GflError, ArithmeticError):
    """Optimization produced NaN/Inf, usually a learning rate that is too large."""
