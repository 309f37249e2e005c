"""
Cue-window negation detection.

A mention is negated when a negation cue appears among the tokens just
before it (the window stops at termination terms such as "but"), or when a
post-entity cue follows it after at most a few auxiliaries, as in
"antibiotics were not prescribed".
"""
import re
from typing import List, Mapping, Sequence, Tuple

from app.extraction.entities import Span, tokenize
from app.kb.knowledge_base import DEFAULT_CUES, surface_key

AUXILIARIES = ("was", "were", "is", "are", "be", "been", "being", "has", "have", "had")


def _phrases(cues: Mapping[str, Sequence[str]], category: str) -> List[Tuple[str, ...]]:
    phrases = {tuple(surface_key(p).split()) for p in cues.get(category, ())}
    return sorted((p for p in phrases if p), key=lambda p: (-len(p), p))


def _contains(window: Sequence[str], phrase: Tuple[str, ...]) -> bool:
    size = len(phrase)
    return any(
        tuple(window[i : i + size]) == phrase
        for i in range(len(window) - size + 1)
    )


def _post_pattern(
    cues: Mapping[str, Sequence[str]], max_auxiliaries: int
) -> "re.Pattern[str]":
    alternatives = "|".join(
        r"\s+".join(map(re.escape, p)) for p in _phrases(cues, "negation_post")
    )
    auxiliaries = "|".join(AUXILIARIES)
    return re.compile(
        rf"^\s+(?:(?:{auxiliaries})\s+){{0,{max_auxiliaries}}}(?:{alternatives})\b",
        re.IGNORECASE,
    )


def detect_negation(
    sentence: str,
    entity_span: Span,
    cues: Mapping[str, Sequence[str]] = DEFAULT_CUES,
    window: int = 5,
    post_window: int = 3,
) -> bool:
    """
    Decide whether the mention at ``entity_span`` is negated.

    Args:
        sentence: sentence text
        entity_span: ``(start, end)`` character offsets of the mention
        cues: cue lists keyed by category (``negation``, ``negation_post``,
            ``termination``)
        window: tokens inspected before the mention
        post_window: auxiliaries allowed between the mention and a
            post-entity cue
    """
    start, end = entity_span
    preceding = [t.text for t in tokenize(sentence) if t.end <= start]
    terminators = _phrases(cues, "termination")
    cut = 0
    for i in range(len(preceding)):
        for term in terminators:
            if tuple(preceding[i:i + len(term)]) == term:
                cut = max(cut, i + len(term))
    scope = preceding[cut:][-window:] if window > 0 else []
    if any(_contains(scope, phrase) for phrase in _phrases(cues, "negation")):
        return True

    if not cues.get("negation_post"):
        return False
    return bool(_post_pattern(cues, post_window).match(sentence[end:]))
