"""Exception hierarchy.

Every error carries a stable ``code`` (the class name) and the process exit
status the command line uses when the error escapes a subcommand.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_ILL_FORMED = 3
EXIT_PRECONDITION = 4
EXIT_LIMIT = 5


class FormalChartError(Exception):
    exit_status = EXIT_PRECONDITION

    @property
    def code(self) -> str:
        return type(self).__name__

    def details(self) -> dict:
        return {}


class ParseError(FormalChartError, ValueError):
    exit_status = EXIT_PARSE

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column

    def details(self) -> dict:
        return {"line": self.line, "column": self.column}


class IllFormedMorphism(FormalChartError, ValueError):
    exit_status = EXIT_ILL_FORMED

    def __init__(self, component: str, reason: str):
        super().__init__(f"component {component}: {reason}")
        self.component = component

    def details(self) -> dict:
        return {"component": self.component}


class ArityMismatch(FormalChartError, ValueError):
    pass


class IndexOutOfRange(FormalChartError, IndexError):
    pass


class ShapeMismatch(FormalChartError, ValueError):
    pass


class FormalOrderViolation(FormalChartError, ValueError):
    pass


class BasepointMismatch(FormalChartError, ValueError):
    pass


class NotLocal(FormalChartError, ValueError):
    pass


class GradeMismatch(FormalChartError, ValueError):
    pass


class ConstraintViolation(FormalChartError, ValueError):
    pass


class SingularDifferential(FormalChartError):
    pass


class NotConstantRank(FormalChartError):
    def __init__(self, message: str, witness: dict | None = None):
        super().__init__(message)
        self.witness = witness

    def details(self) -> dict:
        return {"witness": self.witness} if self.witness else {}


class NotStandardizable(FormalChartError):
    def __init__(self, message: str, certificate=None, witness: str | None = None):
        super().__init__(message)
        self.certificate = certificate
        self.witness = witness

    def details(self) -> dict:
        return {"witness": self.witness} if self.witness else {}


class OrderTooSmall(FormalChartError, ValueError):
    pass


class NotRegularSubmersion(FormalChartError):
    pass


class FiberMismatch(FormalChartError, ValueError):
    pass


class LimitExceeded(FormalChartError):
    exit_status = EXIT_LIMIT
