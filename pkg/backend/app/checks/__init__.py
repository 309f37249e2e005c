"""
Consistency checks and verdict assignment.
"""

from .document_checks import (
    DEFAULT_KEY_ATTRIBUTES,
    check_exclusivity,
    check_implication,
    check_presence,
    check_temporal,
    entities_equivalent,
)
from .pairwise import check_negation, check_numerical, within_tolerance
from .verdicts import (
    CheckContext,
    assign_verdicts,
    build_verdicts,
    collect_failures,
    confidence,
)

__all__ = [
    "DEFAULT_KEY_ATTRIBUTES",
    "check_exclusivity",
    "check_implication",
    "check_presence",
    "check_temporal",
    "entities_equivalent",
    "check_negation",
    "check_numerical",
    "within_tolerance",
    "CheckContext",
    "assign_verdicts",
    "build_verdicts",
    "collect_failures",
    "confidence",
]
