"""
Clinical knowledge base: lexicon, class graph, rules and units.
"""

from .knowledge_base import (
    CATEGORY_ATTRIBUTES,
    ConceptClassGraph,
    ExclusivityPair,
    ImplicationRule,
    KnowledgeBase,
    ReferenceRange,
    SynonymLexicon,
    UnitSpec,
    UnitTable,
    canonical_token,
    convert_unit,
    normalize_concept,
    surface_key,
)
from .loader import DEFAULT_KB_DIR, default_kb, load_kb

__all__ = [
    "CATEGORY_ATTRIBUTES",
    "ConceptClassGraph",
    "ExclusivityPair",
    "ImplicationRule",
    "KnowledgeBase",
    "ReferenceRange",
    "SynonymLexicon",
    "UnitSpec",
    "UnitTable",
    "canonical_token",
    "convert_unit",
    "normalize_concept",
    "surface_key",
    "DEFAULT_KB_DIR",
    "default_kb",
    "load_kb",
]
