"""Exception hierarchy shared across the package.

Every error raised by querysplit derives from QuerySplitError; callers that
process workload files may find a ``task_id`` attribute attached when the
failure happened while handling a specific workload task.
"""

from __future__ import annotations


class QuerySplitError(Exception):
    """Base class for all querysplit errors."""

    task_id: str | None = None


# --- SQL dialect ---------------------------------------------------------


class SqlSyntaxError(QuerySplitError):
    """Statement is outside the supported dialect or malformed."""

    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


class UnknownTable(QuerySplitError):
    pass


class UnknownAttribute(QuerySplitError):
    pass


class AmbiguousColumn(QuerySplitError):
    pass


# --- schema / workload ingestion -----------------------------------------


class DdlSyntaxError(QuerySplitError):
    pass


class DuplicateTable(QuerySplitError):
    pass


class DuplicateAttribute(QuerySplitError):
    pass


class WorkloadFormatError(QuerySplitError):
    pass


class MissingCatalogEntry(QuerySplitError):
    pass


# --- planning -------------------------------------------------------------


class InvalidCase(QuerySplitError):
    pass


class EmptyPartition(QuerySplitError):
    pass


class MissingWidth(QuerySplitError):
    pass


class CaseNotExecutable(QuerySplitError):
    pass


class RoutingError(QuerySplitError):
    pass


# --- files and engines -----------------------------------------------------


class IoFailure(QuerySplitError):
    pass


class RowArityMismatch(QuerySplitError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(message)


class HeaderMismatch(QuerySplitError):
    pass


class AttributeNotInFragment(QuerySplitError):
    pass


class QueryTypeMismatch(QuerySplitError):
    """Predicate literal type is incompatible with the column type."""


class CellParseError(QuerySplitError):
    """A CSV cell could not be converted to the declared column type."""


class DuplicateKey(QuerySplitError):
    pass


class TableNotLoaded(QuerySplitError):
    pass


class InfeasiblePattern(QuerySplitError):
    pass
