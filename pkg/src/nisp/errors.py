"""Exception taxonomy shared across the toolkit."""


class NispError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(NispError):
    """Image or tensor dimensions violate an operation's contract."""


class ParameterError(NispError):
    """A parameter value is outside its valid domain."""


class DegenerateInputError(NispError):
    """Input is structurally valid but carries no usable signal."""


class BoundsError(NispError):
    """A rectangle or index falls outside the image."""


class ShapeError(NispError):
    """Tensor shapes are inconsistent."""


class FormatError(NispError):
    """A file or byte stream does not match its declared format."""


class ConfigError(NispError):
    """Configuration is invalid or inconsistent with loaded data."""


class StateError(NispError):
    """An operation was invoked in the wrong state."""


class DataError(NispError):
    """Dataset contents are missing or malformed."""
