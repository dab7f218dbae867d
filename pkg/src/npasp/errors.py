"""Exception hierarchy.  Every error raised by the package derives from :class:`NpaspError`."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .syntax import Pos


@dataclass(frozen=True)
class Diagnostic:
    message: str
    pos: Optional[Pos] = None
    code: str = "error"

    def __str__(self):
        where = f"{self.pos}: " if self.pos is not None and self.pos.line else ""
        return f"{where}{self.message}"


class NpaspError(Exception):
    def __init__(self, message: str, pos: Optional[Pos] = None):
        self.message = message
        self.pos = pos
        where = f"{pos}: " if pos is not None and pos.line else ""
        super().__init__(where + message)


class ParseError(NpaspError):
    """Syntax error or a statement that is malformed on its own."""

    def __init__(self, message, pos=None, expected=()):
        self.expected = tuple(sorted(expected))
        if self.expected:
            message = f"{message} (expected one of: {', '.join(self.expected)})"
        super().__init__(message, pos)


class ValidationError(NpaspError):
    """One or more per-statement diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0]
        msg = "; ".join(str(d) for d in self.diagnostics)
        super().__init__(msg)
        self.pos = first.pos


class CapExceeded(NpaspError):
    """A configured size guard (ground rules, atoms, total choices) was hit."""


class GroundingError(NpaspError):
    pass


class SemanticsError(NpaspError):
    """A total choice has no selected model under the chosen logic semantics."""


class InferenceError(NpaspError):
    """Undefined conditional probability or degenerate credal query."""


class DataError(NpaspError):
    """Malformed CSV or dimension mismatch in neural data."""


class LearningError(NpaspError):
    pass
