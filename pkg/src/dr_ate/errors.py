"""Exception and warning types.

Two families matter to callers: :class:`ValidationError` for bad arguments or
configuration, and :class:`DataError` for problems with the data itself. The CLI
maps them to exit codes 2 and 3.
"""


class DrAteError(Exception):
    """Base class for all package errors."""


class ValidationError(DrAteError, ValueError):
    """Invalid argument or configuration."""


class DataError(DrAteError):
    """The data cannot support the requested computation."""


class POutOfRange(ValidationError):
    pass


class NotStandardized(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class UnknownFamily(ValidationError):
    pass


class NonFinite(ValidationError):
    pass


class ZeroDenominatorMean(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class RegimeMismatch(ValidationError):
    pass


class DimensionOverflow(DataError):
    pass


class AllTreatedOrNoneTreated(DataError):
    pass


class RankDeficient(DataError):
    """Design matrix is (numerically) not of full column rank.

    ``column`` is the index of the first column found to lie in the span of
    the columns before it, when one can be identified.
    """

    def __init__(self, message, column=None, label=None):
        super().__init__(message)
        self.column = column
        self.label = label


class ParseError(DataError):
    def __init__(self, message, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.column = column


class InvalidTreatmentValue(ParseError):
    pass


class MissingColumn(ParseError):
    pass


class NonFiniteValue(ParseError):
    pass


class DegenerateColumn(DataError):
    pass


class NoEligibleRecords(DataError):
    pass


class EmptyGroup(DataError):
    pass


class AllReplicationsFailed(DataError):
    pass


class NearZeroCovariateMeanWarning(UserWarning):
    """MCM needs a covariate mean away from zero to identify the ATE."""
