"""Exception hierarchy.

Every error raised on bad input derives from :class:`BlendError`; the CLI maps
these to exit code 2.
"""


class BlendError(Exception):
    """Base class for all data and validation errors."""


class FormatError(BlendError):
    """A file does not have the expected structure (header, JSON syntax)."""


class IngestError(BlendError):
    """A well-formed file carries invalid content (duplicate ids, bad scores)."""


class AlignmentError(BlendError):
    """Tables that must share an id set do not."""


class ConfigError(BlendError):
    """Invalid parameters or configuration."""


class DomainError(BlendError):
    """A value lies outside the domain an operator accepts."""


class DegenerateLabelsError(BlendError):
    """Labels contain a single class, so AUROC is undefined."""


class EmptyInputError(BlendError):
    """An operator received an empty table."""


class ObjectiveError(BlendError):
    """The objective returned a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class RecipeError(BlendError):
    """A recipe cannot be resolved against the supplied models."""


class IoError(BlendError, OSError):
    """An output file could not be written."""
