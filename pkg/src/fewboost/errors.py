"""Exception types shared across the package."""


class FewboostError(Exception):
    """Base class for all library errors."""


class ParseError(FewboostError):
    """Malformed CSV content; the message carries row/column context."""


class SchemaError(FewboostError):
    """Schema file does not match the CSV or is internally inconsistent."""


class ValidationError(FewboostError):
    """Arguments violate an operation's preconditions."""


class UndefinedMetricError(FewboostError):
    """Metric has no defined value for the given inputs."""
