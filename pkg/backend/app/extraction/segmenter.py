"""
Sentence segmentation with character offsets.
"""
import re
from typing import Iterable, List, Set

from app.kb.knowledge_base import DEFAULT_CUES
from app.models.base import FrozenModel

_BOUNDARIES = ".;\n"


class Sentence(FrozenModel):
    """A stripped sentence and its ``[start, end)`` offsets in the source text."""
    index: int
    text: str
    start: int
    end: int


def _protected_dots(text: str, abbreviations: Iterable[str]) -> Set[int]:
    protected: Set[int] = set()
    for abbreviation in abbreviations:
        pattern = re.compile(
            r"(?<![A-Za-z0-9])" + re.escape(abbreviation), re.IGNORECASE
        )
        for match in pattern.finditer(text):
            protected.update(
                match.start() + i for i, ch in enumerate(match.group()) if ch == "."
            )
    for position, ch in enumerate(text):
        if (
            ch == "."
            and 0 < position < len(text) - 1
            and text[position - 1].isdigit()
            and text[position + 1].isdigit()
        ):
            protected.add(position)
    return protected


def segment_sentences(
    text: str, abbreviations: Iterable[str] = DEFAULT_CUES["abbreviation"]
) -> List[Sentence]:
    """
    Split ``text`` on ``.``, ``;`` and newlines.

    Decimal points between digits and dots inside listed abbreviations do not
    split. Offsets index into the original text and exclude the surrounding
    whitespace.
    """
    if not text:
        return []
    protected = _protected_dots(text, abbreviations)
    sentences: List[Sentence] = []
    segment_start = 0

    def close(end: int) -> None:
        raw = text[segment_start:end]
        stripped = raw.strip()
        if stripped:
            start = segment_start + (len(raw) - len(raw.lstrip()))
            sentences.append(
                Sentence(
                    index=len(sentences),
                    text=stripped,
                    start=start,
                    end=start + len(stripped),
                )
            )

    for position, ch in enumerate(text):
        if ch in _BOUNDARIES and position not in protected:
            close(position)
            segment_start = position + 1
    close(len(text))
    return sentences
