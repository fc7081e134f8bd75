"""Exception hierarchy.

The CLI maps each family onto an exit code, so every error raised by the
library belongs to exactly one of the three base classes below.
"""

from __future__ import annotations


class PlateDisciplineError(Exception):
    exit_code = 3


class ConfigError(PlateDisciplineError):
    """Bad parameters or configuration (exit code 1)."""

    exit_code = 1


class DataError(PlateDisciplineError):
    """Input data violates a schema or domain contract (exit code 2)."""

    exit_code = 2


class InvariantError(PlateDisciplineError):
    """An internal consistency check failed (exit code 3)."""

    exit_code = 3


class SchemaError(DataError):
    pass


class UntrackedPitchError(DataError):
    pass


class DegenerateZoneError(DataError):
    pass


class ClassificationError(DataError):
    """A pitch description is missing from the swing-label table."""

    def __init__(self, values):
        self.values = sorted(set(values))
        super().__init__(f"unknown pitch description(s): {', '.join(map(str, self.values))}")


class CategorizationError(DataError):
    """A pitch-type code is missing from the category table."""

    def __init__(self, codes):
        self.codes = sorted(set(map(str, codes)))
        super().__init__(f"unmapped pitch type code(s): {', '.join(self.codes)}")


class DegenerateScaleError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class IndexFormatError(DataError):
    pass


class JoinError(DataError):
    pass


class DomainError(DataError):
    """A numeric argument is outside the domain of the function."""


class ParameterError(ConfigError):
    pass
