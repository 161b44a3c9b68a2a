"""Shared exception types used across the package."""


class TubekitError(Exception):
    """Base class for package-specific failures."""


class ParseError(TubekitError, ValueError):
    """A data file could not be parsed or failed validation.

    Carries the offending line number when the source is line-oriented.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
        if line is not None:
            prefix += f"{line}:"
        if prefix:
            message = f"{prefix} {message}"
        super().__init__(message)


class MissingClassError(TubekitError, ValueError):
    """A required class has no training data or no trained model."""

    def __init__(self, class_id, context: str = ""):
        self.class_id = class_id
        msg = f"no data for class {class_id!r}"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


class ConfigurationError(TubekitError, RuntimeError):
    """The pipeline is wired inconsistently (missing model, bad paths, ...)."""


class InsufficientEvidenceError(TubekitError, ValueError):
    """Not enough observations to carry out an estimation."""
