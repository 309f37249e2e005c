"""
Rule-based proposition extraction.
"""

from .entities import EntityMention, scan_entities, tokenize
from .negation import detect_negation
from .pipeline import PropositionExtractor, extract_propositions
from .segmenter import Sentence, segment_sentences
from .temporal import find_time_mentions, normalize_time
from .values import ValueMention, find_value_mentions, parse_value, parse_values

__all__ = [
    "EntityMention",
    "scan_entities",
    "tokenize",
    "detect_negation",
    "PropositionExtractor",
    "extract_propositions",
    "Sentence",
    "segment_sentences",
    "find_time_mentions",
    "normalize_time",
    "ValueMention",
    "find_value_mentions",
    "parse_value",
    "parse_values",
]
