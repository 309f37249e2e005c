"""
Invariant checks for propositions.

Violations are returned as data so callers can report every broken rule at
once instead of stopping at the first.
"""
from typing import List

from app.models.base import FrozenModel
from app.models.proposition import (
    Anchor,
    Frequency,
    Interval,
    Marker,
    Proposition,
    PropositionSet,
    Qualitative,
    Quantity,
    QuantityPair,
    TimeRef,
)
from app.models.timeline import interval_order_ok


class Violation(FrozenModel):
    """A broken invariant: the field it concerns and the rule name."""
    field: str
    rule: str
    detail: str = ""


def _canonical(concept: str) -> bool:
    return concept == concept.lower() and not any(ch.isspace() for ch in concept)


def _time_violations(time: TimeRef, field: str = "time") -> List[Violation]:
    found: List[Violation] = []
    points = [time]
    if isinstance(time, Interval):
        points = [time.start, time.end]
        if not interval_order_ok(time):
            found.append(
                Violation(
                    field=field, rule="time.interval_order", detail="start after end"
                )
            )
    for point in points:
        if isinstance(point, Marker):
            if point.anchor is Anchor.DAY_N and (point.day is None or point.day < 0):
                found.append(
                    Violation(
                        field=field,
                        rule="time.day_nonnegative",
                        detail=f"day={point.day}",
                    )
                )
            if point.anchor is not Anchor.DAY_N and point.day is not None:
                found.append(Violation(field=field, rule="time.day_only_for_day_n"))
    return found


def validate(p: Proposition) -> List[Violation]:
    """
    Check a proposition against every type invariant.

    Returns:
        Empty list when the proposition is well formed, otherwise one
        Violation per broken rule, in field order.
    """
    found: List[Violation] = []
    doc_id, index = p.id
    if not doc_id:
        found.append(Violation(field="id", rule="id.doc_nonempty"))
    if index < 0:
        found.append(
            Violation(field="id", rule="id.index_nonnegative", detail=str(index))
        )

    if not p.entity:
        found.append(Violation(field="entity", rule="entity.nonempty"))
    elif not _canonical(p.entity):
        found.append(
            Violation(field="entity", rule="entity.canonical", detail=p.entity)
        )

    sentence, start, end = p.source_span
    from_text = end > start
    if from_text and not p.attribute.raw_cue:
        found.append(Violation(field="attribute", rule="attribute.raw_cue"))

    value = p.value
    if isinstance(value, (Quantity, QuantityPair)) and not value.unit:
        found.append(Violation(field="value", rule="value.unit_nonempty"))
    if isinstance(value, Frequency):
        if value.count <= 0:
            found.append(Violation(field="value", rule="value.frequency_positive"))
        if not value.per:
            found.append(Violation(field="value", rule="value.frequency_per"))
    if isinstance(value, Qualitative) and not value.label:
        found.append(Violation(field="value", rule="value.label_nonempty"))

    found.extend(_time_violations(p.time))

    if sentence < 0 or start < 0 or start > end:
        found.append(Violation(field="source_span", rule="span.order"))
    return found


def validate_set(propositions: PropositionSet) -> List[Violation]:
    """Set-level invariants plus every member's own violations."""
    found: List[Violation] = []
    for expected, p in enumerate(propositions.items):
        if p.id[0] != propositions.doc_id:
            found.append(
                Violation(field="id", rule="set.shared_doc_id", detail=str(p.id))
            )
        if p.id[1] != expected:
            found.append(
                Violation(field="id", rule="set.contiguous_indices", detail=str(p.id))
            )
        found.extend(validate(p))
    return found
