"""
Tokenization and longest-match entity scanning against the synonym lexicon.
"""
import re
from typing import Dict, List, Sequence, Tuple

from app.kb.knowledge_base import KnowledgeBase
from app.models.base import FrozenModel
from app.models.proposition import ConceptId

TOKEN_PATTERN = re.compile(r"[A-Za-z0-9]+")

Span = Tuple[int, int]


class Token(FrozenModel):
    text: str
    start: int
    end: int


class EntityMention(FrozenModel):
    """A lexicon hit: concept id, matched surface and its token range."""
    concept: ConceptId
    surface: str
    start: int
    end: int
    first_token: int
    last_token: int

    @property
    def span(self) -> Span:
        return (self.start, self.end)


def tokenize(sentence: str) -> List[Token]:
    """Lowercased alphanumeric tokens with character offsets."""
    return [
        Token(text=m.group().lower(), start=m.start(), end=m.end())
        for m in TOKEN_PATTERN.finditer(sentence)
    ]


def overlaps_any(start: int, end: int, spans: Sequence[Span]) -> bool:
    return any(start < s_end and s_start < end for s_start, s_end in spans)


def token_index_range(tokens: Sequence[Token], start: int, end: int) -> Tuple[int, int]:
    """``[first, last)`` indices of the tokens overlapping ``[start, end)``."""
    inside = [
        i for i, token in enumerate(tokens) if token.start < end and start < token.end
    ]
    if inside:
        return inside[0], inside[-1] + 1
    before = sum(1 for token in tokens if token.end <= start)
    return before, before


MASK = "|"


def scan_entities(
    sentence: str, kb: KnowledgeBase, masked: Sequence[Span] = ()
) -> List[EntityMention]:
    """
    Left-to-right, longest-match, non-overlapping lexicon scan.

    The sentence is rewritten as its lowercased tokens joined by single
    spaces, the form lexicon keys take, and handed to the lexicon's keyword
    processor. Tokens overlapping a ``masked`` span (temporal phrases, value
    expressions) are replaced by a boundary mark so no match can use them.
    """
    tokens = tokenize(sentence)
    pieces: List[str] = []
    starts: Dict[int, int] = {}
    ends: Dict[int, int] = {}
    offset = 0
    for i, token in enumerate(tokens):
        text = MASK if overlaps_any(token.start, token.end, masked) else token.text
        starts[offset] = i
        ends[offset + len(text)] = i
        pieces.append(text)
        offset += len(text) + 1
    normalized = " ".join(pieces)

    mentions: List[EntityMention] = []
    hits = kb.lexicon.keyword_processor.extract_keywords(normalized, span_info=True)
    for concept, norm_start, norm_end in hits:
        first, last = starts[norm_start], ends[norm_end]
        start, end = tokens[first].start, tokens[last].end
        mentions.append(
            EntityMention(
                concept=concept, surface=sentence[start:end], start=start, end=end,
                first_token=first, last_token=last + 1,
            )
        )
    return mentions
