"""Exception types shared across the package."""


class DataError(Exception):
    """Raised when input data cannot be ingested or fails validation."""


class NumericError(Exception):
    """Raised when a computation is mathematically undefined for the input."""
