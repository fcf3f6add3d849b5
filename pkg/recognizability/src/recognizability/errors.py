"""Error taxonomy for the recognizability package.

Mirrors the exit-code contract of the planeguard CLI (1 usage, 2 data,
3 internal) without importing it: InvalidArgumentError maps to 1, the
data-shaped errors map to 2.
"""


class RecognizabilityError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(RecognizabilityError):
    """A parameter is outside its documented domain."""


class DataFormatError(RecognizabilityError):
    """A file on disk does not parse as the expected format."""


class InvalidDatasetError(RecognizabilityError):
    """A dataset violates a training precondition (classes, counts)."""


class InvalidInputError(RecognizabilityError):
    """Runtime inputs are inconsistent with each other."""
