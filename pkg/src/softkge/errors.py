"""Exception types shared across the package."""


class DataError(ValueError):
    """Malformed or inconsistent input data.

    Raised for bad TSV lines, unknown labels, vocabulary/checkpoint size
    mismatches, and infeasible synthetic-data requests. ``lineno`` is set
    when the problem is tied to a specific line of an input file.
    """

    def __init__(self, message: str, lineno: int | None = None):
        super().__init__(message)
        self.lineno = lineno


class NumericalError(RuntimeError):
    """Training produced a non-finite loss or score."""
