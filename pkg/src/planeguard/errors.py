"""Error types raised by planeguard.

The CLI maps these onto exit code 2 (bad data or arguments); anything
else escaping a command is an internal error (exit code 3).
"""


class PlaneguardError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(PlaneguardError):
    """A parameter value is outside its documented range."""


class InvalidInputError(PlaneguardError):
    """Input data has the wrong shape, dtype, or value domain."""


class DegenerateInputError(PlaneguardError):
    """Input is too small or too empty to produce any statistics."""


class DataFormatError(PlaneguardError):
    """A file on disk could not be parsed."""


class InvalidTrainingSetError(PlaneguardError):
    """Training data is unusable (missing class, length mismatch)."""
