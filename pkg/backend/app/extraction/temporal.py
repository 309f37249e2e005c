"""
Temporal phrase recognition and normalization to the patient timeline.
"""
import re
from datetime import date
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

from app.models.base import FrozenModel
from app.models.proposition import (
    UNKNOWN_TIME,
    Anchor,
    DocContext,
    Interval,
    Marker,
    Offset,
    TimeRef,
    UnknownTime,
)
from app.models.rational import Rational

NUMBER_WORDS = {
    "one": 1,
    "two": 2,
    "three": 3,
    "four": 4,
    "five": 5,
    "six": 6,
    "seven": 7,
    "eight": 8,
    "nine": 9,
    "ten": 10,
}
NUMBER = r"(?:\d+(?:\.\d+)?|" + "|".join(NUMBER_WORDS) + r")"


def parse_number(text: str) -> Fraction:
    """Digits (``"8.2"``) or a number word one..ten."""
    word = NUMBER_WORDS.get(text.lower())
    return Fraction(word) if word is not None else Fraction(text)


class TimeMention(FrozenModel):
    """A recognized temporal phrase: a time point or interval, or a duration in days."""
    start: int
    end: int
    time: Optional[TimeRef] = None
    days: Optional[Rational] = None


_STAY_UNTIL_DISCHARGE = Interval(
    start=Marker.at(Anchor.ADMISSION), end=Marker.at(Anchor.DISCHARGE)
)
_STAY_BEFORE_DISCHARGE = Interval(
    start=Marker.at(Anchor.ADMISSION),
    end=Marker.at(Anchor.DISCHARGE),
    end_inclusive=False,
)

Builder = Callable[
    ["re.Match[str]", DocContext], Tuple[Optional[TimeRef], Optional[Fraction]]
]


def _day_n(match: "re.Match[str]", _: DocContext):
    day = parse_number(match.group(1))
    if day.denominator != 1:
        return Offset(days=day), None
    return Marker.day_n(int(day)), None


def _iso_date(match: "re.Match[str]", context: DocContext):
    try:
        day = date.fromisoformat(match.group(1))
    except ValueError:
        return UNKNOWN_TIME, None
    offset = context.offset_of(day)
    return (Offset(days=offset) if offset is not None else UNKNOWN_TIME), None


def _duration(match: "re.Match[str]", _: DocContext):
    amount = parse_number(match.group(1))
    unit = match.group(2).lower()
    return None, amount * 7 if unit.startswith("week") else amount


def _fixed(time: TimeRef) -> Builder:
    return lambda match, context: (time, None)


def _phrase(pattern: str) -> "re.Pattern[str]":
    return re.compile(pattern, re.IGNORECASE)


_STAY = r"(?:hospital\s+stay|hospitalization|admission)"

_PATTERNS: List[Tuple["re.Pattern[str]", Builder]] = [
    (_phrase(r"\b(?:on\s+)?(?:hospital\s+)?day\s+(" + NUMBER + r")\b"), _day_n),
    (
        _phrase(r"\b(?:on|at|upon)\s+admission\b"),
        _fixed(Marker.at(Anchor.ADMISSION)),
    ),
    (
        _phrase(r"\b(?:before|prior\s+to)\s+admission\b"),
        _fixed(Marker.at(Anchor.PRE_ADMISSION)),
    ),
    (
        _phrase(r"\b(?:after|following)\s+admission\b"),
        _fixed(_STAY_UNTIL_DISCHARGE),
    ),
    (
        _phrase(r"\b(?:during|throughout)\s+(?:the\s+)?" + _STAY + r"\b"),
        _fixed(_STAY_UNTIL_DISCHARGE),
    ),
    (
        _phrase(r"\b(?:on|at|upon)\s+discharge\b"),
        _fixed(Marker.at(Anchor.DISCHARGE)),
    ),
    (
        _phrase(r"\b(?:before|prior\s+to)\s+discharge\b"),
        _fixed(_STAY_BEFORE_DISCHARGE),
    ),
    (
        _phrase(r"\b(?:until|through|by)\s+discharge\b"),
        _fixed(_STAY_UNTIL_DISCHARGE),
    ),
    (
        _phrase(r"\b(?:after|following|post)[\s-]+discharge\b"),
        _fixed(Marker.at(Anchor.POST_DISCHARGE)),
    ),
    (re.compile(r"\b(?:on\s+)?(\d{4}-\d{2}-\d{2})\b"), _iso_date),
    (_phrase(r"\bfor\s+(" + NUMBER + r")\s+(days?|weeks?)\b"), _duration),
]


def find_time_mentions(
    sentence: str, context: DocContext = DocContext()
) -> List[TimeMention]:
    """All non-overlapping temporal phrases, left to right.

    The longest phrase wins at a shared start.
    """
    found: List[TimeMention] = []
    for pattern, build in _PATTERNS:
        for match in pattern.finditer(sentence):
            time, days = build(match, context)
            found.append(
                TimeMention(
                    start=match.start(), end=match.end(), time=time, days=days
                )
            )
    found.sort(key=lambda m: (m.start, -(m.end - m.start)))
    kept: List[TimeMention] = []
    for mention in found:
        if kept and mention.start < kept[-1].end:
            continue
        kept.append(mention)
    return kept


def _shift(point: TimeRef, days: Fraction) -> Optional[TimeRef]:
    if isinstance(point, Offset):
        return Offset(days=point.days + days)
    if isinstance(point, Marker) and point.anchor in (Anchor.ADMISSION, Anchor.DAY_N):
        end = (point.day or 0) + days
        return Marker.day_n(int(end)) if end.denominator == 1 else Offset(days=end)
    return None


def normalize_time(sentence: str, context: DocContext = DocContext()) -> TimeRef:
    """
    Time reference of a sentence.

    The first placeable point or interval wins. A "for N days" duration turns
    an admission, day or date point into a half-open interval of that length;
    a duration without such an anchor gives Unknown.
    """
    mentions = find_time_mentions(sentence, context)
    points = [
        m.time
        for m in mentions
        if m.time is not None and not isinstance(m.time, UnknownTime)
    ]
    durations = [m.days for m in mentions if m.days is not None]
    if not points:
        return UNKNOWN_TIME
    point = points[0]
    if durations and not isinstance(point, Interval):
        end = _shift(point, durations[0])
        if end is not None:
            return Interval(start=point, end=end, end_inclusive=False)
    return point
