"""Exception types shared across the package."""


class DataError(ValueError):
    """Raised when an input file or corpus violates the expected format."""


class NumericalError(RuntimeError):
    """Raised when sampling or scoring produces non-finite values."""
