"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ZhukError(Exception):
    """Base class; the CLI maps subclasses onto exit codes."""

    exit_code = 2


class InputError(ZhukError, ValueError):
    exit_code = 2


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class NotWNUError(InputError):
    pass


class NotSpecialError(InputError):
    pass


class InvarianceError(InputError):
    """A relation is not preserved by the algebra operation."""

    def __init__(self, relation: str, rows, image, message: str | None = None):
        self.relation = relation
        self.rows = rows
        self.image = image
        super().__init__(
            message
            or f"relation {relation!r} is not invariant: rows {rows} map to {image}"
        )


class CapExceeded(ZhukError):
    exit_code = 3

    def __init__(self, what: str, reached: int, cap: int):
        self.what = what
        self.reached = reached
        self.cap = cap
        super().__init__(f"{what}: cap {cap} exceeded (reached {reached})")


class InternalDiagnostic(ZhukError):
    """A theory-backed guarantee did not hold; carries context for bug reports."""

    exit_code = 4

    def __init__(self, message: str, **context):
        self.context = context
        super().__init__(message)


class UbiquityViolated(InternalDiagnostic):
    pass


class ClassificationUndecided(InternalDiagnostic):
    pass


class NotAffineError(InternalDiagnostic):
    pass


class MixedPrimeError(InternalDiagnostic):
    pass
