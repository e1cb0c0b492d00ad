# app/errors.py

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence


@dataclass(frozen=True)
class Diagnostic:
    """
    One problem found in a model source or artifact.

    :param severity: "error" or "warning".
    :param message: Human readable description.
    :param line: 1-based line in the source, if known.
    :param column: 1-based column in the source, if known.
    """
    severity: str
    message: str
    line: Optional[int] = None
    column: Optional[int] = None

    def render(self, filename: str = "<input>") -> str:
        """
        Formats the diagnostic as ``file:line:col: severity: message``.
        """
        return f"{filename}:{self.line or 0}:{self.column or 0}: {self.severity}: {self.message}"


class PiffError(Exception):
    """Base class for every error raised by the toolchain."""

    def diagnostics(self) -> list[Diagnostic]:
        return [Diagnostic("error", str(self))]


# --- Source errors ---
class SourceError(PiffError):
    """An error tied to a position in some source text."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def diagnostics(self) -> list[Diagnostic]:
        return [Diagnostic("error", self.message, self.line, self.column)]


class LexError(SourceError):
    pass


class PiffSyntaxError(SourceError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None,
                 expected: Iterable[str] = ()):
        super().__init__(message, line, column)
        self.expected = sorted(expected)


class ValidationError(PiffError):
    """Raised by validation with every violation found."""

    def __init__(self, diagnostics: Sequence[Diagnostic]):
        self._diagnostics = list(diagnostics)
        first = self._diagnostics[0].message if self._diagnostics else "invalid model"
        super().__init__(f"{len(self._diagnostics)} problem(s); first: {first}")

    def diagnostics(self) -> list[Diagnostic]:
        return list(self._diagnostics)


# --- Semantic errors ---
class EvaluationError(PiffError):
    pass


class TranslationError(PiffError):
    pass


# --- Polynomial and matrix errors ---
class PolynomialError(PiffError):
    pass


class DegreeOverflowError(PolynomialError):
    pass


class DimensionMismatchError(PolynomialError):
    pass


class SimplexDomainError(PolynomialError):
    pass


class MatrixBuildError(PiffError):
    pass


class StochasticityError(MatrixBuildError):
    """
    Compiled rows that do not sum to 1 or go negative on the simplex.

    :param rows: (state, message) pairs, one per offending row or entry.
    """

    def __init__(self, rows: Sequence[tuple[str, str]]):
        self.rows = list(rows)
        state, message = self.rows[0]
        super().__init__(f"{len(self.rows)} row problem(s); first: {state}: {message}")

    def diagnostics(self) -> list[Diagnostic]:
        return [Diagnostic("error", f"{state}: {message}") for state, message in self.rows]


class NotLumpableError(PiffError):
    """
    A class sum cannot be written over block aggregates.

    :param first: Index pair (i, j) of the first offending coefficient.
    :param second: Index pair it was compared against.
    """

    def __init__(self, message: str, first: tuple[int, int], second: Optional[tuple[int, int]] = None):
        super().__init__(message)
        self.first = first
        self.second = second


# --- Analysis errors ---
class NumericDriftError(PiffError):
    pass


class SimulationError(PiffError):
    pass


class LabelError(PiffError):
    pass


class FormulaError(SourceError):
    pass
