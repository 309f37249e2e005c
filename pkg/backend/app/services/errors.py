"""
Custom exceptions for the veriprop services.

Every error carries an optional ``original_exception`` so callers that wrap
lower-level failures keep the cause around for logging.
"""
from typing import List, Optional


class VeripropError(Exception):
    """Base exception for all veriprop errors."""

    def __init__(self, message: str, original_exception: Optional[Exception] = None):
        super().__init__(message)
        self.original_exception = original_exception


class UsageError(VeripropError):
    """Raised when a command is invoked with invalid arguments."""


class DataError(VeripropError):
    """Raised when an input file or record cannot be used."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        original_exception: Optional[Exception] = None,
    ):
        super().__init__(message, original_exception=original_exception)
        self.path = path
        self.line = line

    def location(self) -> str:
        """Human readable ``path:line`` prefix, empty when unknown."""
        if self.path and self.line:
            return f"{self.path}:{self.line}"
        return self.path or ""


# Knowledge base

class ParseError(DataError):
    """A knowledge-base file line could not be parsed."""

    def __init__(self, line: int, reason: str, path: Optional[str] = None):
        super().__init__(f"line {line}: {reason}", path=path, line=line)
        self.reason = reason


class CycleError(DataError):
    """The concept class graph contains a cycle."""

    def __init__(self, cycle: List[str], path: Optional[str] = None):
        super().__init__(f"is-a cycle: {' -> '.join(cycle)}", path=path)
        self.cycle = cycle


class DuplicateSurfaceForm(DataError):
    """A surface form was registered more than once."""

    def __init__(
        self, form: str, path: Optional[str] = None, line: Optional[int] = None
    ):
        super().__init__(f"duplicate surface form '{form}'", path=path, line=line)
        self.form = form


class UnknownUnit(DataError):
    """A unit is not registered in the unit table."""

    def __init__(self, unit: str):
        super().__init__(f"unknown unit '{unit}'")
        self.unit = unit


class DimensionMismatch(DataError):
    """Two units do not share a dimension."""

    def __init__(self, source: str, target: str):
        super().__init__(f"cannot convert '{source}' to '{target}': dimensions differ")
        self.source = source
        self.target = target


# Extraction and alignment

class EmptyDocument(DataError):
    """A document has neither text nor structured entries."""


class ZeroVector(VeripropError):
    """Cosine similarity requested for two zero vectors."""


class EmbeddingCoverageError(DataError):
    """A precomputed embedding file does not cover every proposition."""


# Evaluation and corpus

class IdMismatch(DataError):
    """Predicted and gold label lists are not id-aligned."""


class KBTooSmall(DataError):
    """The knowledge base lacks the vocabulary needed to generate a patient."""


class NoEligibleSite(VeripropError):
    """No proposition in the document can host the requested fault."""

    def __init__(self, kind: str):
        super().__init__(f"no eligible site for fault '{kind}'")
        self.kind = kind


# Adapter math

class ShapeMismatch(VeripropError):
    """Matrix or vector shapes are incompatible."""


class IndexOutOfRange(VeripropError):
    """A target index falls outside the vocabulary."""
