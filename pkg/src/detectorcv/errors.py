"""Exception and warning types shared across the package."""


class DetectorCVError(ValueError):
    """Base class for all errors raised by detectorcv."""


# image I/O
class MalformedHeader(DetectorCVError):
    pass


class UnsupportedPixelFormat(DetectorCVError):
    pass


class TruncatedScanline(DetectorCVError):
    pass


class SizeMismatch(DetectorCVError):
    pass


class DimensionMismatch(DetectorCVError):
    pass


class NoForegroundPixels(DetectorCVError):
    pass


# filters / cvm / detectors
class EvenSide(DetectorCVError):
    """A window side that must be odd was even (or < 1)."""


class EmptyPopulation(DetectorCVError):
    pass


class ImageTooSmall(DetectorCVError):
    pass


# partitioning / evaluation
class EmptyForeground(DetectorCVError):
    pass


class SingleSubgroup(DetectorCVError):
    pass


class DegenerateSplit(UserWarning):
    """The bright/dark partition left one side empty."""


class DegenerateInputs(UserWarning):
    """Repeatability was requested with an empty feature point list."""


class AllOnBackground(UserWarning):
    """Every feature point fell on background pixels."""
