"""Exception types raised by the planning engine.

Every error derives from :class:`CommitPlanError`, itself a ``ValueError``,
so callers can catch the whole family at once. The CLI maps
:class:`ConfigError` subclasses to exit code 2 and :class:`DataError`
subclasses to exit code 3.
"""


class CommitPlanError(ValueError):
    pass


class ConfigError(CommitPlanError):
    pass


class DataError(CommitPlanError):
    pass


# demand_core
class NonIntegerRatio(ConfigError):
    pass


class EmptyResult(DataError):
    pass


class ZeroVariance(DataError):
    pass


class LagTooLarge(DataError):
    pass


class InsufficientSpan(DataError):
    pass


class ZeroBaseline(DataError):
    pass


class RangeOutOfBounds(DataError):
    pass


# ingest
class ParseError(DataError):
    def __init__(self, row, column, reason):
        self.row = row
        self.column = column
        self.reason = reason
        super().__init__(f"row {row}, column {column!r}: {reason}")


class DuplicateTimestamp(DataError):
    pass


class GapTooLong(DataError):
    pass


class NonUniformGranularity(DataError):
    pass


class EmptySelection(ConfigError):
    pass


class GranularityMismatch(DataError):
    pass


# commit_opt
class NegativeCommitment(ConfigError):
    pass


class DegenerateBracket(DataError):
    pass


# forecast
class InsufficientHistory(DataError):
    pass


class HorizonTooLong(ConfigError):
    pass


class LengthMismatch(DataError):
    pass


# planner
class CoverageGap(DataError):
    pass


class InvalidTrend(ConfigError):
    pass


class NonPositiveCommitment(ConfigError):
    pass


# freepool
class AlignmentMismatch(DataError):
    pass


class InvariantViolation(CommitPlanError):
    """A computed result broke one of its own consistency checks."""
