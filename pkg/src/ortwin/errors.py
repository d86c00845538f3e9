"""Exception hierarchy shared by the library, CLI, and HTTP service."""

from __future__ import annotations


class OrTwinError(Exception):
    """Base class; exit_code drives the CLI process status."""

    exit_code = 4


class UsageError(OrTwinError):
    exit_code = 1


class ParseError(OrTwinError):
    """A file could not be parsed; carries file/row/column context."""

    exit_code = 2

    def __init__(self, message: str, *, file: str = "", row: int | None = None, column: str = ""):
        self.file = file
        self.row = row
        self.column = column
        where = file
        if row is not None:
            where += f":{row}"
        if column:
            where += f" [{column}]"
        super().__init__(f"{where}: {message}" if where else message)


class ReferentialError(ParseError):
    """A row references an unknown case_id or room_id."""


class DuplicateKeyError(ParseError):
    """Two rows claim the same key."""


class DomainViolationError(OrTwinError):
    """Error-level constraint violations were found."""

    exit_code = 3

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(f"{len(self.violations)} constraint violation(s)")


class PreconditionError(OrTwinError):
    """An operation was called outside its stated precondition."""


class UnassignableCaseError(OrTwinError):
    """A non-elective case cannot be placed (no realized room, or past the horizon cap)."""

    def __init__(self, case_id: str, reason: str):
        self.case_id = case_id
        super().__init__(f"case {case_id!r}: {reason}")


class EmptyRoomSetError(OrTwinError):
    """Strategy evaluation was asked to rank an empty room set."""


class UnsupportedFormatError(OrTwinError):
    exit_code = 2


class DuplicateCaseIdError(OrTwinError):
    """The same case_id denotes different cases across two schedules."""
