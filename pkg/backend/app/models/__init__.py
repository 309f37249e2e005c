"""
Domain models for veriprop: propositions, documents and verdicts.
"""

from .proposition import (
    UNKNOWN_TIME,
    Anchor,
    Attribute,
    AttributeKind,
    ConceptId,
    DocContext,
    DocumentKind,
    Frequency,
    Interval,
    Marker,
    Offset,
    Present,
    Proposition,
    PropositionId,
    PropositionSet,
    Qualitative,
    Quantity,
    QuantityPair,
    UnknownTime,
    proposition_key,
)
from .document import Document, StructuredEntry
from .timeline import Relation, relate
from .validation import Violation, validate
from .verdict import (
    CheckFailure,
    FailureCode,
    GoldLabel,
    Label,
    MatchResult,
    Omission,
    Severity,
    Verdict,
    VerdictReport,
)

__all__ = [
    "UNKNOWN_TIME",
    "Anchor",
    "Attribute",
    "AttributeKind",
    "ConceptId",
    "DocContext",
    "DocumentKind",
    "Frequency",
    "Interval",
    "Marker",
    "Offset",
    "Present",
    "Proposition",
    "PropositionId",
    "PropositionSet",
    "Qualitative",
    "Quantity",
    "QuantityPair",
    "UnknownTime",
    "proposition_key",
    "Document",
    "StructuredEntry",
    "Relation",
    "relate",
    "Violation",
    "validate",
    "CheckFailure",
    "FailureCode",
    "GoldLabel",
    "Label",
    "MatchResult",
    "Omission",
    "Severity",
    "Verdict",
    "VerdictReport",
]
