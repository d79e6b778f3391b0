"""Exception hierarchy shared by the library and the CLI.

Argument problems map to exit code 2, numerical problems to exit code 3.
"""
from typing import Optional


class ProbingError(Exception):
    exit_code = 1


class ArgumentError(ProbingError, ValueError):
    exit_code = 2


class DimensionError(ArgumentError):
    pass


class ParseError(ArgumentError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(ProbingError, ArithmeticError):
    exit_code = 3


class DomainError(NumericalError):
    pass


class IllConditionedError(NumericalError):
    pass


class FitError(NumericalError):
    pass


class OracleCapError(NumericalError):
    pass
