"""Exception types shared across the package."""


class TeamSemanticsError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TeamSemanticsError):
    """Malformed formula text, model file, team file or form file."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line})" if column is None else f" (line {line}, col {column})"
        super().__init__(message + where)


class NotFlatError(TeamSemanticsError):
    """A first-order-only operation received a formula with dependency
    atoms, global disjunction or the possibility operator."""


class UnknownDependencyError(TeamSemanticsError):
    """Dependency name not present in the registry."""


class ArityMismatchError(TeamSemanticsError):
    """Relation or dependency applied to the wrong number of arguments."""


class BindingError(TeamSemanticsError):
    """Unbound variable, element outside the universe, or a choice
    function that does not match its source team."""


class ResourceExhausted(TeamSemanticsError):
    """An enumeration or evaluation exceeded its configured budget.

    This is a third outcome, distinct from any truth value; callers must
    never coerce it to false.
    """


class UnsupportedShapeError(TeamSemanticsError):
    """Formula shape outside a rewrite rule set (e.g. a possibility
    operator above a global disjunction)."""
