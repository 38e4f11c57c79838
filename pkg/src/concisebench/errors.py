"""Exception types shared across the package."""


class ConcisebenchError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInputError(ConcisebenchError, ValueError):
    """Raised when an aggregate is requested over no data.

    Deliberately distinct from returning 0: "no records" and "all records
    wrong" must never be confused.
    """


class ConfigurationError(ConcisebenchError, ValueError):
    """Raised for invalid run, prompt, or fixture configuration."""


class IngestionError(ConcisebenchError):
    """Raised when a dataset record cannot be parsed."""


class FormatMismatchError(IngestionError):
    """Raised when a dataset file does not match its declared format."""


class GatewayError(ConcisebenchError):
    """Base class for generation-endpoint failures; carries a request id."""

    def __init__(self, message: str, request_id: str | None = None):
        super().__init__(message)
        self.request_id = request_id


class BackendError(ConcisebenchError):
    """Raised when a similarity backend fails; never silently swallowed."""
