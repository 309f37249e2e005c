"""
Value expression parsing: quantity pairs, quantities, frequencies and
qualitative labels, attached to the nearest entity mention.
"""
import re
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

from app.extraction.entities import (
    EntityMention,
    Span,
    overlaps_any,
    scan_entities,
    token_index_range,
    tokenize,
)
from app.extraction.temporal import NUMBER, find_time_mentions, parse_number
from app.kb.knowledge_base import KnowledgeBase
from app.models.base import FrozenModel
from app.models.proposition import (
    Frequency,
    Present,
    Qualitative,
    Quantity,
    QuantityPair,
    Value,
)

# Lower rank wins when several expressions attach to one entity.
PRECEDENCE = {
    "quantity_pair": 0,
    "quantity": 1,
    "frequency": 2,
    "qualitative": 3,
    "present": 4,
}


class ValueMention(FrozenModel):
    value: Value
    start: int
    end: int

    @property
    def rank(self) -> int:
        return PRECEDENCE[self.value.kind]


def _every_hours(match: "re.Match[str]") -> Frequency:
    hours = parse_number(match.group(1) or match.group(2))
    return Frequency(count=1 / hours, per="h")


def _per(count: int, per: str) -> Callable[["re.Match[str]"], Frequency]:
    return lambda match: Frequency(count=count, per=per)


def _schedule(pattern: str) -> "re.Pattern[str]":
    return re.compile(pattern, re.IGNORECASE)


_FREQUENCIES: List[Tuple["re.Pattern[str]", Callable[["re.Match[str]"], Frequency]]] = [
    (_schedule(r"\b(?:twice\s+(?:daily|a\s+day)|bid)\b"), _per(2, "day")),
    (_schedule(r"\b(?:three\s+times\s+(?:daily|a\s+day)|tid)\b"), _per(3, "day")),
    (_schedule(r"\b(?:four\s+times\s+(?:daily|a\s+day)|qid)\b"), _per(4, "day")),
    (_schedule(r"\b(?:twice\s+(?:weekly|a\s+week))\b"), _per(2, "week")),
    (
        _schedule(r"\b(?:once\s+)?daily\b|\bonce\s+a\s+day\b|\bevery\s+day\b|\bqd\b"),
        _per(1, "day"),
    ),
    (
        _schedule(r"\b(?:once\s+)?weekly\b|\bonce\s+a\s+week\b|\bevery\s+week\b"),
        _per(1, "week"),
    ),
    (_schedule(r"\bevery\s+(" + NUMBER + r")\s+hours?\b|\bq(\d+)h\b"), _every_hours),
]

_PAIR = r"(?<![\d./])(\d+(?:\.\d+)?)\s*/\s*(\d+(?:\.\d+)?)(?![\d./])"
_UNIT_END = r"(?![A-Za-z0-9/])"


@lru_cache(maxsize=16)
def _unit_patterns(
    kb: KnowledgeBase,
) -> Tuple["re.Pattern[str]", "re.Pattern[str]", Optional["re.Pattern[str]"]]:
    units = kb.unit_pattern
    pair = re.compile(rf"{_PAIR}(?:\s*({units}){_UNIT_END})?", re.IGNORECASE)
    quantity = re.compile(
        rf"(?<![\w./])({NUMBER})\s*({units}){_UNIT_END}", re.IGNORECASE
    )
    labels = sorted(
        {label.lower() for label in kb.cue_phrases("qualitative")},
        key=lambda s: (-len(s), s),
    )
    qualitative = None
    if labels:
        alternation = "|".join(
            r"\s+".join(map(re.escape, label.split())) for label in labels
        )
        qualitative = re.compile(rf"\b({alternation})\b(?!\s+for\b)", re.IGNORECASE)
    return pair, quantity, qualitative


def find_value_mentions(
    sentence: str,
    kb: KnowledgeBase,
    masked: Sequence[Span] = (),
    default_pair_unit: str = "mmHg",
) -> List[ValueMention]:
    """
    Every value expression in the sentence, scanned in precedence order.

    A later, lower-precedence match never overlaps an earlier one or a masked
    span, so "120/80 mmHg" is a single pair rather than also "80 mmHg".
    """
    pair_re, quantity_re, qualitative_re = _unit_patterns(kb)
    claimed: List[Span] = list(masked)
    found: List[ValueMention] = []

    def claim(start: int, end: int, value: Value) -> None:
        if overlaps_any(start, end, claimed):
            return
        claimed.append((start, end))
        found.append(ValueMention(value=value, start=start, end=end))

    for match in pair_re.finditer(sentence):
        if match.group(3):
            unit = kb.units.resolve(match.group(3))
        else:
            unit = default_pair_unit
        pair = QuantityPair(first=match.group(1), second=match.group(2), unit=unit)
        claim(match.start(), match.end(), pair)

    for match in quantity_re.finditer(sentence):
        unit = kb.units.resolve(match.group(2))
        if unit is not None:
            quantity = Quantity(magnitude=parse_number(match.group(1)), unit=unit)
            claim(match.start(), match.end(), quantity)

    for pattern, build in _FREQUENCIES:
        for match in pattern.finditer(sentence):
            claim(match.start(), match.end(), build(match))

    if qualitative_re is not None:
        for match in qualitative_re.finditer(sentence):
            label = " ".join(match.group(1).lower().split())
            claim(match.start(), match.end(), Qualitative(label=label))

    found.sort(key=lambda m: m.start)
    return found


def attach_values(
    sentence: str,
    entities: Sequence[EntityMention],
    mentions: Sequence[ValueMention],
) -> List[List[ValueMention]]:
    """
    Attach each value to the nearest entity by token distance, ties to the
    entity on the left. Each entity's values come back in precedence order.
    """
    tokens = tokenize(sentence)
    attached: List[List[ValueMention]] = [[] for _ in entities]
    for mention in mentions:
        first, last = token_index_range(tokens, mention.start, mention.end)
        best: Optional[Tuple[Tuple[int, int, int], int]] = None
        for position, entity in enumerate(entities):
            if last <= entity.first_token:
                distance = entity.first_token - last
            elif first >= entity.last_token:
                distance = first - entity.last_token
            else:
                distance = 0
            side = 0 if entity.start <= mention.start else 1
            rank = (distance, side, position)
            if best is None or rank < best[0]:
                best = (rank, position)
        if best is not None:
            attached[best[1]].append(mention)
    for bucket in attached:
        bucket.sort(key=lambda m: (m.rank, m.start))
    return attached


def _sentence_entities(sentence: str, kb: KnowledgeBase, default_pair_unit: str):
    time_spans = [(m.start, m.end) for m in find_time_mentions(sentence)]
    mentions = find_value_mentions(sentence, kb, time_spans, default_pair_unit)
    value_spans = [(m.start, m.end) for m in mentions]
    entities = scan_entities(sentence, kb, time_spans + value_spans)
    return entities, mentions


def parse_values(
    sentence: str,
    entity_span: Span,
    kb: KnowledgeBase,
    default_pair_unit: str = "mmHg",
) -> List[Value]:
    """All values attached to the entity at ``entity_span``, in precedence order."""
    entities, mentions = _sentence_entities(sentence, kb, default_pair_unit)
    position = next(
        (i for i, e in enumerate(entities) if e.span == tuple(entity_span)), None
    )
    if position is None:
        start, end = entity_span
        first, last = token_index_range(tokenize(sentence), start, end)
        target = EntityMention(
            concept=kb.normalize_concept(sentence[start:end]),
            surface=sentence[start:end],
            start=start,
            end=end,
            first_token=first,
            last_token=last,
        )
        entities = sorted(list(entities) + [target], key=lambda e: e.start)
        position = entities.index(target)
    return [m.value for m in attach_values(sentence, entities, mentions)[position]]


def parse_value(
    sentence: str,
    entity_span: Span,
    kb: KnowledgeBase,
    default_pair_unit: str = "mmHg",
) -> Value:
    """Highest-precedence value attached to the entity, or ``Present``."""
    values = parse_values(sentence, entity_span, kb, default_pair_unit)
    return values[0] if values else Present()


def parse_value_text(
    text: str,
    kb: KnowledgeBase,
    unit: Optional[str] = None,
    default_pair_unit: str = "mmHg",
) -> Optional[Value]:
    """
    Parse a standalone value string from a structured entry.

    ``unit`` is appended before parsing so ``("20", "mg")`` and ``"20 mg"``
    read the same. Returns None when nothing value-like is found.
    """
    body = f"{text} {unit}" if unit else text
    mentions = find_value_mentions(body, kb, default_pair_unit=default_pair_unit)
    if not mentions:
        return None
    return min(mentions, key=lambda m: (m.rank, m.start)).value
