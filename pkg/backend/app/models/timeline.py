"""
Partial order over time references.

Anchors resolve to positions on an admission-relative day axis:
pre-admission sits at minus infinity, admission at day 0, ``day_n`` at n,
discharge at its offset when both dates are known and post-discharge at plus
infinity. An unresolved discharge is only known to follow admission and
precede post-discharge. Unknown times are incomparable with everything.
"""
from enum import Enum
from fractions import Fraction
from typing import NamedTuple, Optional, Union

from app.models.proposition import (
    Anchor,
    DocContext,
    Interval,
    Marker,
    Offset,
    TimeRef,
    UnknownTime,
)

__all__ = [
    "Relation",
    "relate",
    "compare_positions",
    "resolve_point",
    "overlaps",
    "interval_order_ok",
]

_NEG_INF = float("-inf")
_POS_INF = float("inf")
_DISCHARGE = "discharge"

Position = Union[Fraction, float, str]


class Relation(str, Enum):
    BEFORE = "before"
    AFTER = "after"
    EQUAL = "equal"
    OVERLAP = "overlap"


class _Span(NamedTuple):
    start: Position
    end: Position
    end_inclusive: bool


def resolve_point(point: Union[Marker, Offset], context: DocContext) -> Position:
    if isinstance(point, Offset):
        return point.days
    anchor = point.anchor
    if anchor is Anchor.PRE_ADMISSION:
        return _NEG_INF
    if anchor is Anchor.ADMISSION:
        return Fraction(0)
    if anchor is Anchor.DAY_N:
        return Fraction(point.day or 0)
    if anchor is Anchor.DISCHARGE:
        offset = context.discharge_offset
        return offset if offset is not None else _DISCHARGE
    return _POS_INF


def compare_positions(a: Position, b: Position) -> Optional[int]:
    """-1, 0 or 1 when the order of ``a`` and ``b`` is determined, else None."""
    a_symbolic = isinstance(a, str)
    b_symbolic = isinstance(b, str)
    if a_symbolic and b_symbolic:
        return 0
    if a_symbolic:
        flipped = compare_positions(b, a)
        return None if flipped is None else -flipped
    if b_symbolic:
        # unresolved discharge: after admission, before post-discharge
        if a == _POS_INF:
            return 1
        if a <= 0:
            return -1
        return None
    return (a > b) - (a < b)  # type: ignore[operator]


def _span(time: TimeRef, context: DocContext) -> Optional[_Span]:
    if isinstance(time, UnknownTime):
        return None
    if isinstance(time, Interval):
        return _Span(
            resolve_point(time.start, context),
            resolve_point(time.end, context),
            time.end_inclusive,
        )
    position = resolve_point(time, context)
    return _Span(position, position, True)


def _strictly_before(x: _Span, y: _Span) -> Optional[bool]:
    c = compare_positions(x.end, y.start)
    if c is None:
        return None
    if c == 0:
        return not x.end_inclusive
    return c < 0


def relate(
    first: TimeRef,
    first_context: DocContext,
    second: TimeRef,
    second_context: DocContext,
) -> Optional[Relation]:
    """
    Relation of ``first`` to ``second``, or None when incomparable.

    Args:
        first: time reference of the first proposition
        first_context: anchors of the document ``first`` comes from
        second: time reference of the second proposition
        second_context: anchors of the document ``second`` comes from

    Returns:
        BEFORE / AFTER when one span ends before the other starts, EQUAL for
        identical spans, OVERLAP for any other determinate arrangement.
    """
    a = _span(first, first_context)
    b = _span(second, second_context)
    if a is None or b is None:
        return None
    a_before = _strictly_before(a, b)
    b_before = _strictly_before(b, a)
    if a_before:
        return Relation.BEFORE
    if b_before:
        return Relation.AFTER
    if a_before is None or b_before is None:
        return None
    starts = compare_positions(a.start, b.start)
    ends = compare_positions(a.end, b.end)
    if starts is None or ends is None:
        return None
    if starts == 0 and ends == 0 and a.end_inclusive == b.end_inclusive:
        return Relation.EQUAL
    return Relation.OVERLAP


def overlaps(first: TimeRef, second: TimeRef, context: DocContext) -> bool:
    """True when two times of the same document are equal or overlap."""
    return relate(first, context, second, context) in (Relation.EQUAL, Relation.OVERLAP)


def interval_order_ok(interval: Interval, context: Optional[DocContext] = None) -> bool:
    """False only when the start is known to fall after the end."""
    ctx = context or DocContext()
    c = compare_positions(
        resolve_point(interval.start, ctx), resolve_point(interval.end, ctx)
    )
    return c is None or c <= 0
