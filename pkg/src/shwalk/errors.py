"""Exception hierarchy shared across the package."""


class SHWError(Exception):
    """Base class for all errors raised by shwalk."""


class ConfigurationError(SHWError, ValueError):
    """Invalid parameter or configuration value."""


class InvalidSampleError(SHWError, ValueError):
    """Non-finite or otherwise unusable acceleration sample."""


class BoundaryError(SHWError, IndexError):
    """Requested window falls outside the signal."""


class ShapeError(SHWError, ValueError):
    """Array has the wrong length or dimensionality."""


class GridError(SHWError, ValueError):
    """Frequency does not lie on the spectral grid."""


class AlignmentError(SHWError, ValueError):
    """Two streams that must cover the same epochs do not."""


class InsufficientDataError(SHWError, ValueError):
    """Too few observations to estimate a quantity."""


class UndefinedROCError(SHWError, ValueError):
    """ROC curve requested for truth labels with a single class."""


class ParseError(SHWError, ValueError):
    """Malformed input file.

    Parameters
    ----------
    message : str
        Human readable description.
    offset : int, optional
        Byte offset (binary files) or line number (text files) of the problem.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class TruncatedError(ParseError):
    """Payload shorter than the header declares."""
