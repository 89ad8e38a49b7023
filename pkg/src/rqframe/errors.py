"""Exception hierarchy for rqframe.

Every error raised by the library derives from :class:`RQError`, so callers
(and the CLI) can catch one class and print a one-line diagnostic.
"""


class RQError(Exception):
    """Base class for all library errors."""


class NonHermitianSpectrum(RQError):
    """Inverse DFT produced a non-negligible imaginary part."""


class DegenerateDenominator(RQError):
    """A filter denominator vanished away from the DC bin."""


class UnityViolation(RQError):
    """A perfect-reconstruction (unity) identity failed its tolerance."""


class DimensionMismatch(RQError):
    """Image and filter-bank grids differ."""


class BankMismatch(RQError):
    """Coefficients were produced by a different filter bank."""


class BadPatchSize(RQError):
    """Hankel patch or kernel size is out of range."""


class ShapeMismatch(RQError):
    """Array shapes are inconsistent with each other."""


class BandCountMismatch(RQError):
    """Kernel family and image disagree on the number of bands."""


class ZeroMu(RQError):
    """A strictly positive smoothing parameter was required."""


class BadThresholds(RQError):
    """Spectral-filter thresholds are outside 0..N or unordered."""


class BadLength(RQError):
    """Series length is not divisible by the required power of two."""


class BadShape(RQError):
    """Input shape is incompatible with the network geometry."""


class NonPositiveSigma(RQError):
    """Observation noise must be strictly positive."""


class DivergedLoss(RQError):
    """Training produced a NaN or infinite loss."""


class InvalidMask(RQError):
    """Segmentation mask is not a valid one-hot encoding."""


class InfinitePsnr(RQError):
    """PSNR is infinite because the two images are identical."""


class BadConfig(RQError):
    """A configuration value failed to parse or validate."""


class BadTensorFile(RQError):
    """A .rqt file is truncated or has the wrong magic."""
