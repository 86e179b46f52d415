"""Exception types shared across the package."""

from __future__ import annotations


class SarError(Exception):
    """Base class for every error raised by sarkit."""


class MissingAssignmentError(SarError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"no value assigned to variable {self.name!r}"


class BudgetExceededError(SarError):
    """A tower bound would have to be materialized beyond the configured budget."""


class ParseError(SarError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class NotNormalizedError(SarError):
    """Input still contains constructs a normal form forbids (negation, implication)."""


class NotPreparedError(SarError):
    """An atom uses a relation the operation does not accept."""


class SizeExceededError(SarError):
    pass


class WrongRelationError(SarError):
    pass


class PreconditionError(SarError):
    pass


class UnsupportedPositionError(SarError):
    pass


class DimensionMismatchError(SarError):
    pass


class OracleError(SarError):
    """The grid oracle cannot handle the sentence (unbounded block, too many variables)."""
