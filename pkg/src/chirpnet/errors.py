"""Exception types shared across the toolkit."""


class ChirpnetError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(ChirpnetError):
    """Array shapes or channel counts do not line up."""


class ParameterError(ChirpnetError):
    """An argument value is outside its allowed range."""


class DegenerateInputError(ChirpnetError):
    """Input too small for the requested operation."""


class NumericError(ChirpnetError):
    """Non-finite values where finite ones are required."""


class GraphError(ChirpnetError):
    """Malformed computation graph (cycle or missing node)."""


class ConfigError(ChirpnetError):
    """Invalid model or run configuration."""


class FormatError(ChirpnetError):
    """Unsupported or malformed file format."""


class CorruptionError(FormatError):
    """A container file is internally inconsistent or truncated."""


class ValidationError(ChirpnetError):
    """Dataset manifest failed validation."""


class EmptyResultError(ChirpnetError):
    """An operation produced no usable output (e.g. an all-silent clip)."""


class FetchError(ChirpnetError):
    """Remote archive could not be reached after retries."""


class OrderingError(ChirpnetError):
    """A sequence that must be time-ordered is not."""


class DivergenceError(ChirpnetError):
    """Training produced a non-finite loss."""
