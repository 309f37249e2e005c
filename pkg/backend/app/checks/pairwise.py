"""
Checks over one matched (summary, EHR) proposition pair.
"""
from fractions import Fraction
from typing import Optional

from app.kb.knowledge_base import KnowledgeBase
from app.models.proposition import (
    Frequency,
    Proposition,
    Qualitative,
    Quantity,
    QuantityPair,
    is_value_bearing,
    proposition_key,
)
from app.models.rational import format_rational, to_fraction
from app.models.verdict import CheckFailure, FailureCode
from app.services.errors import DataError


def check_negation(
    summary_p: Proposition, ehr_p: Proposition
) -> Optional[CheckFailure]:
    """NEGATION_FAIL when both sides make the same claim with opposite polarity."""
    if proposition_key(summary_p) != proposition_key(ehr_p):
        return None
    if summary_p.negated == ehr_p.negated:
        return None
    return CheckFailure(
        code=FailureCode.NEGATION_FAIL,
        proposition_ids=(summary_p.id,),
        detail=f"summary negated={summary_p.negated}, record negated={ehr_p.negated}",
    )


def within_tolerance(a: Fraction, b: Fraction, tau_num: float) -> bool:
    """``|a - b| <= tau * max(|a|, |b|)`` in exact arithmetic."""
    return abs(a - b) <= to_fraction(tau_num) * max(abs(a), abs(b))


def _quantity_in(
    kb: KnowledgeBase, magnitude: Fraction, unit: str, target_unit: str
) -> Fraction:
    if unit == target_unit:
        return magnitude
    quantity = Quantity(magnitude=magnitude, unit=unit)
    return kb.convert_unit(quantity, target_unit).magnitude


def _mismatch(summary_p: Proposition, detail: str) -> CheckFailure:
    return CheckFailure(
        code=FailureCode.NUMERICAL_FAIL,
        proposition_ids=(summary_p.id,),
        detail=detail,
    )


def check_numerical(
    summary_p: Proposition,
    ehr_p: Proposition,
    kb: KnowledgeBase,
    tau_num: float = 1e-9,
) -> Optional[CheckFailure]:
    """
    NUMERICAL_FAIL on a value or unit mismatch.

    Applies only when both propositions share a key and carry values.
    Quantities are converted to the record's unit first; units that cannot
    be converted count as a mismatch. Pairs compare componentwise,
    frequencies as rates, qualitative labels after concept normalization.
    """
    if proposition_key(summary_p) != proposition_key(ehr_p):
        return None
    if not (is_value_bearing(summary_p) and is_value_bearing(ehr_p)):
        return None
    ours, theirs = summary_p.value, ehr_p.value
    if ours.kind != theirs.kind:
        return _mismatch(
            summary_p, f"value kinds differ: {ours.kind} vs {theirs.kind}"
        )

    fmt = format_rational
    try:
        if isinstance(ours, Quantity):
            converted = _quantity_in(kb, ours.magnitude, ours.unit, theirs.unit)
            if not within_tolerance(converted, theirs.magnitude, tau_num):
                return _mismatch(
                    summary_p,
                    f"{fmt(ours.magnitude)} {ours.unit} vs "
                    f"{fmt(theirs.magnitude)} {theirs.unit}",
                )
        elif isinstance(ours, QuantityPair):
            first = _quantity_in(kb, ours.first, ours.unit, theirs.unit)
            second = _quantity_in(kb, ours.second, ours.unit, theirs.unit)
            if not (
                within_tolerance(first, theirs.first, tau_num)
                and within_tolerance(second, theirs.second, tau_num)
            ):
                return _mismatch(
                    summary_p,
                    f"{fmt(ours.first)}/{fmt(ours.second)} {ours.unit} vs "
                    f"{fmt(theirs.first)}/{fmt(theirs.second)} {theirs.unit}",
                )
        elif isinstance(ours, Frequency):
            rate, expected = kb.frequency_rate(ours), kb.frequency_rate(theirs)
            if not within_tolerance(rate, expected, tau_num):
                return _mismatch(
                    summary_p,
                    f"{fmt(ours.count)}/{ours.per} vs {fmt(theirs.count)}/{theirs.per}",
                )
        elif isinstance(ours, Qualitative):
            if kb.normalize_concept(ours.label) != kb.normalize_concept(theirs.label):
                return _mismatch(summary_p, f"'{ours.label}' vs '{theirs.label}'")
    except DataError as e:
        return _mismatch(summary_p, str(e))
    return None
