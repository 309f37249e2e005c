"""
Checks over whole proposition sets: implication, temporal order,
exclusivity and presence.

Only affirmed (non-negated) propositions assert antecedents, consequents,
exclusive states or key facts.
"""
from typing import Iterable, List, Sequence

from app.kb.knowledge_base import KnowledgeBase
from app.models.proposition import AttributeKind, Proposition, PropositionSet
from app.models.timeline import overlaps, relate
from app.models.verdict import (
    CheckFailure,
    FailureCode,
    MatchResult,
    Omission,
    Severity,
)

DEFAULT_KEY_ATTRIBUTES = (
    AttributeKind.DIAGNOSIS,
    AttributeKind.TREATMENT,
    AttributeKind.PROCEDURE,
    AttributeKind.MEDICATION,
)


def _affirmed(items: Iterable[Proposition]) -> List[Proposition]:
    return [p for p in items if not p.negated]


def check_implication(
    summary: PropositionSet, ehr: PropositionSet, kb: KnowledgeBase
) -> List[CheckFailure]:
    """
    IMPLICATION_FAIL for every rule whose antecedent the summary asserts
    while the consequent is missing from the summary but present in the
    record. When the record lacks the consequent too, a warning is emitted
    instead of a failure.
    """
    summary_facts = _affirmed(summary.items)
    ehr_facts = _affirmed(ehr.items)
    failures: List[CheckFailure] = []
    for rule in kb.implications:
        antecedents = [
            p for p in summary_facts if kb.is_member(p.entity, rule.antecedent)
        ]
        if not antecedents:
            continue
        if any(kb.is_member(p.entity, rule.consequent) for p in summary_facts):
            continue
        grounded = any(kb.is_member(p.entity, rule.consequent) for p in ehr_facts)
        ids = tuple(p.id for p in antecedents)
        implied = f"{rule.antecedent} implies {rule.consequent}"
        if grounded:
            failures.append(
                CheckFailure(
                    code=FailureCode.IMPLICATION_FAIL,
                    proposition_ids=ids,
                    detail=f"{implied}, which the record documents",
                )
            )
        else:
            failures.append(
                CheckFailure(
                    code=FailureCode.IMPLICATION_FAIL,
                    proposition_ids=ids,
                    detail=f"{implied}, absent from both documents",
                    severity=Severity.WARNING,
                )
            )
    return failures


def check_temporal(
    summary: PropositionSet, ehr: PropositionSet, matches: Sequence[MatchResult]
) -> List[CheckFailure]:
    """
    TEMPORAL_FAIL for each pair of matched summary propositions whose order
    differs from the order of their record counterparts. Pairs with an
    incomparable time on either side are skipped.
    """
    pairs = [
        (summary.items[position], ehr.get(result.ehr_id))
        for position, result in enumerate(matches)
        if result.matched and result.ehr_id is not None
    ]
    failures: List[CheckFailure] = []
    for a in range(len(pairs)):
        summary_a, ehr_a = pairs[a]
        for b in range(a + 1, len(pairs)):
            summary_b, ehr_b = pairs[b]
            claimed = relate(
                summary_a.time, summary.context, summary_b.time, summary.context
            )
            if claimed is None:
                continue
            recorded = relate(ehr_a.time, ehr.context, ehr_b.time, ehr.context)
            if recorded is None or claimed == recorded:
                continue
            failures.append(
                CheckFailure(
                    code=FailureCode.TEMPORAL_FAIL,
                    proposition_ids=(summary_a.id, summary_b.id),
                    detail=(
                        f"summary says {claimed.value}, "
                        f"record says {recorded.value}"
                    ),
                )
            )
    return failures


def check_exclusivity(summary: PropositionSet, kb: KnowledgeBase) -> List[CheckFailure]:
    """
    EXCLUSIVITY_FAIL on both members of any mutually exclusive pair asserted
    at overlapping times.
    """
    facts = _affirmed(summary.items)
    failures: List[CheckFailure] = []
    for a in range(len(facts)):
        for b in range(a + 1, len(facts)):
            first, second = facts[a], facts[b]
            if not kb.exclusive_resolved(first.entity, second.entity):
                continue
            if not overlaps(first.time, second.time, summary.context):
                continue
            failures.append(
                CheckFailure(
                    code=FailureCode.EXCLUSIVITY_FAIL,
                    proposition_ids=(first.id, second.id),
                    detail=(
                        f"{first.entity} and {second.entity} "
                        "cannot hold at the same time"
                    ),
                )
            )
    return failures


def entities_equivalent(a: str, b: str, kb: KnowledgeBase) -> bool:
    """Class-level equivalence: equal, or one is a member of the other."""
    return a == b or kb.is_member(a, b) or kb.is_member(b, a)


def check_presence(
    summary: PropositionSet,
    ehr: PropositionSet,
    kb: KnowledgeBase,
    key_attributes: Sequence[AttributeKind] = DEFAULT_KEY_ATTRIBUTES,
) -> List[Omission]:
    """
    Omissions for affirmed key record facts with no summary counterpart.

    A counterpart shares the attribute kind and an equivalent entity; a
    negated summary proposition still counts as mentioning the fact.
    """
    keys = set(key_attributes)
    omissions: List[Omission] = []
    for fact in _affirmed(ehr.items):
        kind = fact.attribute.kind
        if kind not in keys:
            continue
        mentioned = any(
            p.attribute.kind == kind and entities_equivalent(p.entity, fact.entity, kb)
            for p in summary.items
        )
        if not mentioned:
            omissions.append(
                Omission(ehr_id=fact.id, entity=fact.entity, attribute=kind)
            )
    return omissions
