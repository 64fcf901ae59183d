"""Exception hierarchy shared by all tracker modules."""


class TrackerError(Exception):
    """Base class for every error raised by this package."""


class ImageLoadError(TrackerError):
    """An image file could not be read or decoded."""


class InvalidStateError(TrackerError):
    """An affine state contains non-finite or otherwise unusable parameters."""


class ParameterError(TrackerError, ValueError):
    """An argument is outside its documented range."""


class DegenerateRegionError(TrackerError):
    """A superpixel region is empty, so histograms are undefined."""


class InvalidInputError(TrackerError):
    """Numeric input contains NaN or infinity."""


class DegenerateGeometryError(TrackerError):
    """A sampling geometry (e.g. the negative annulus) misses the frame entirely."""


class InitializationError(TrackerError):
    """The tracker could not be initialized from the first frame."""


class SequenceFormatError(TrackerError):
    """A sequence directory does not follow the expected benchmark layout."""


class TrackingFailureError(TrackerError):
    """Tracking broke down mid-sequence; carries the last usable state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state
