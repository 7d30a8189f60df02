from typing import Optional


class FairAuditError(Exception):
    """Base class for all errors raised by fairaudit."""


class SchemaError(FairAuditError):
    """A required column is missing or the column mapping is inconsistent."""


class ParseError(FairAuditError):
    """A cell could not be parsed into the value its column requires."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyInputError(FairAuditError):
    """The input contained no data rows."""


class InvalidParameterError(FairAuditError, ValueError):
    """A parameter is outside its allowed range."""


class NotEstimableError(FairAuditError):
    """A quantity cannot be computed on the given data."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class ManifestError(FairAuditError):
    """The pre-registration manifest could not be read or is malformed."""


class StorageError(FairAuditError):
    """Reading or writing an artifact on disk failed."""
