"""
Verdict assignment: run every check over a matched document pair and label
each summary proposition.
"""
from collections import defaultdict
from typing import Dict, List, Sequence, Set, Tuple

from pydantic import Field, model_validator

from app.checks.document_checks import (
    DEFAULT_KEY_ATTRIBUTES,
    check_exclusivity,
    check_implication,
    check_presence,
    check_temporal,
)
from app.checks.pairwise import check_negation, check_numerical
from app.kb.knowledge_base import KnowledgeBase
from app.models.base import FrozenModel
from app.models.proposition import AttributeKind, PropositionId, PropositionSet
from app.models.verdict import (
    CheckFailure,
    FailureCode,
    Label,
    MatchResult,
    Omission,
    Severity,
    Verdict,
    ordered_codes,
)


class CheckContext(FrozenModel):
    """Inputs of one verification: both sets, their alignment and the thresholds."""
    summary: PropositionSet
    ehr: PropositionSet
    matches: Tuple[MatchResult, ...]
    kb: KnowledgeBase
    tau_num: float = Field(default=1e-9, ge=0.0)
    key_attributes: Tuple[AttributeKind, ...] = DEFAULT_KEY_ATTRIBUTES
    confidence_floor: float = 0.01
    confidence_ceiling: float = 0.99

    @model_validator(mode="after")
    def _matches_cover_summary(self):
        ids = [tuple(m.summary_id) for m in self.matches]
        expected = [tuple(p.id) for p in self.summary.items]
        if ids != expected:
            raise ValueError(
                "matches must cover every summary proposition exactly once, in order"
            )
        return self


def collect_failures(ctx: CheckContext) -> List[CheckFailure]:
    """Every failure and warning the checks raise, in check order."""
    found: List[CheckFailure] = []
    for position, result in enumerate(ctx.matches):
        if not result.matched or result.ehr_id is None:
            continue
        summary_p = ctx.summary.items[position]
        ehr_p = ctx.ehr.get(result.ehr_id)
        for failure in (
            check_negation(summary_p, ehr_p),
            check_numerical(summary_p, ehr_p, ctx.kb, ctx.tau_num),
        ):
            if failure is not None:
                found.append(failure)
    found.extend(check_implication(ctx.summary, ctx.ehr, ctx.kb))
    found.extend(check_temporal(ctx.summary, ctx.ehr, ctx.matches))
    found.extend(check_exclusivity(ctx.summary, ctx.kb))
    return found


def confidence(
    score: float, failures: int, floor: float = 0.01, ceiling: float = 0.99
) -> float:
    """Synthetic calibration: the match score halved per failure code, clipped."""
    raw = score * (0.5 ** failures)
    return min(ceiling, max(floor, raw))


def build_verdicts(
    ctx: CheckContext, failures: Sequence[CheckFailure]
) -> List[Verdict]:
    codes: Dict[PropositionId, Set[FailureCode]] = defaultdict(set)
    for failure in failures:
        if failure.severity is not Severity.FAIL:
            continue
        for pid in failure.proposition_ids:
            codes[tuple(pid)].add(failure.code)

    verdicts: List[Verdict] = []
    for p, result in zip(ctx.summary.items, ctx.matches):
        accrued = set(codes.get(tuple(p.id), set()))
        if not result.matched:
            accrued.add(FailureCode.NO_EVIDENCE)
        ordered = ordered_codes(accrued)
        label = Label.SUPPORTED if not ordered else Label.NOT_SUPPORTED
        verdicts.append(Verdict(
            proposition_id=p.id,
            label=label,
            failure_codes=ordered,
            matched_ehr_id=result.ehr_id if result.matched else None,
            similarity=result.score,
            confidence=confidence(
                result.score,
                len(ordered),
                ctx.confidence_floor,
                ctx.confidence_ceiling,
            ),
        ))
    return verdicts


def assign_verdicts(ctx: CheckContext) -> Tuple[List[Verdict], List[Omission]]:
    """
    Label every summary proposition and list record omissions.

    A proposition is Supported iff it is matched and accrues no failure
    code; unmatched propositions get NO_EVIDENCE. Codes accumulate across
    checks. Output follows summary order.
    """
    verdicts = build_verdicts(ctx, collect_failures(ctx))
    omissions = check_presence(ctx.summary, ctx.ehr, ctx.kb, ctx.key_attributes)
    return verdicts, omissions
