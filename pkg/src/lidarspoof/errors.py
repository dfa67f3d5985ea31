"""Exception hierarchy shared by every module in the package."""


class LidarSpoofError(Exception):
    """Base class for all package errors."""


class InvalidArgument(LidarSpoofError, ValueError):
    pass


class DegenerateRay(InvalidArgument):
    """A zero-norm point has no ray direction."""


class InvalidResolution(InvalidArgument):
    pass


class FormatError(LidarSpoofError, ValueError):
    """A file could not be decoded."""


class ValidationError(LidarSpoofError, ValueError):
    """A file decoded but carries out-of-range values."""


class PreconditionError(LidarSpoofError, RuntimeError):
    pass


class ApplicabilityError(LidarSpoofError):
    """The requested attack cannot be mounted against the given LiDAR."""


class InvalidModel(InvalidArgument):
    pass
