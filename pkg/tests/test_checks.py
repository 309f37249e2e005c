"""
Unit tests for the consistency checks and verdict assignment.
"""
from datetime import date
from fractions import Fraction

import pytest
from pydantic import ValidationError

from app.checks.document_checks import (
    check_exclusivity,
    check_implication,
    check_presence,
    check_temporal,
    entities_equivalent,
)
from app.checks.pairwise import check_negation, check_numerical, within_tolerance
from app.checks.verdicts import CheckContext, assign_verdicts, confidence
from app.models.proposition import (
    Anchor,
    Attribute,
    AttributeKind,
    DocContext,
    DocumentKind,
    Frequency,
    Interval,
    Marker,
    Present,
    Proposition,
    PropositionSet,
    Qualitative,
    Quantity,
    QuantityPair,
    UnknownTime,
)
from app.models.verdict import FailureCode, Label, MatchResult, Severity

D = AttributeKind.DIAGNOSIS
T = AttributeKind.TREATMENT
LAB = AttributeKind.LAB_VALUE
STATUS = AttributeKind.STATUS
DOSE = AttributeKind.DOSAGE
PROC = AttributeKind.PROCEDURE


def prop(doc, index, entity, kind, value=None, time=None, negated=False):
    return Proposition(
        id=(doc, index),
        entity=entity,
        attribute=Attribute(kind=kind),
        value=value or Present(),
        time=time or UnknownTime(),
        negated=negated,
    )


def summary_of(*items, context=None):
    return PropositionSet(
        doc_id="s",
        kind=DocumentKind.SUMMARY,
        items=items,
        context=context or DocContext(),
    )


def ehr_of(*items, context=None):
    return PropositionSet(
        doc_id="e",
        kind=DocumentKind.EHR,
        items=items,
        context=context or DocContext(),
    )


def matched(i, j, score=0.9):
    return MatchResult(summary_id=("s", i), ehr_id=("e", j), score=score, matched=True)


def lab(doc, index, magnitude, unit="mg/dL", entity="creatinine"):
    return prop(doc, index, entity, LAB, Quantity(magnitude=magnitude, unit=unit))


# Negation


def test_negation_conflict():
    summary = prop("s", 0, "antibiotics", T, negated=True)
    failure = check_negation(summary, prop("e", 0, "antibiotics", T))
    assert failure.code is FailureCode.NEGATION_FAIL
    assert failure.proposition_ids == (("s", 0),)


def test_negation_passes_on_agreement_or_different_key():
    fever = prop("s", 0, "fever", STATUS)
    assert check_negation(fever, prop("e", 0, "fever", STATUS)) is None
    negated = prop("s", 0, "pneumonia", D, negated=True)
    assert check_negation(negated, prop("e", 0, "pneumonia", T)) is None


# Numerical


def test_within_tolerance_is_relative():
    assert within_tolerance(Fraction(100), Fraction(101), 0.01)
    assert not within_tolerance(Fraction(100), Fraction(101), 0.001)
    assert within_tolerance(Fraction(0), Fraction(0), 0.0)


def test_numerical_mismatch(kb):
    failure = check_numerical(lab("s", 0, "1.2"), lab("e", 0, "2.1"), kb)
    assert failure.code is FailureCode.NUMERICAL_FAIL
    assert "1.2 mg/dL" in failure.detail


def test_numerical_converts_units(kb):
    summary = prop("s", 0, "ceftriaxone", DOSE, Quantity(magnitude="0.5", unit="g"))
    record = prop("e", 0, "ceftriaxone", DOSE, Quantity(magnitude=500, unit="mg"))
    assert check_numerical(summary, record, kb) is None


def test_numerical_unconvertible_units_fail(kb):
    assert check_numerical(lab("s", 0, 1, "mg"), lab("e", 0, 1, "mmHg"), kb)
    assert check_numerical(lab("s", 0, 1, "furlong"), lab("e", 0, 1, "mg/dL"), kb)


def test_numerical_pairs_compare_componentwise(kb):
    reading = prop("s", 0, "blood_pressure", LAB, QuantityPair(first=120, second=80))
    high = prop("e", 0, "blood_pressure", LAB, QuantityPair(first=180, second=100))
    same = prop("e", 0, "blood_pressure", LAB, QuantityPair(first=120, second=80))
    assert check_numerical(reading, high, kb)
    assert check_numerical(reading, same, kb) is None


def test_numerical_frequencies_compare_rates(kb):
    twice_daily = prop("s", 0, "metoprolol", DOSE, Frequency(count=2, per="day"))
    every_12h = prop(
        "e", 0, "metoprolol", DOSE, Frequency(count=Fraction(1, 12), per="h")
    )
    every_8h = prop(
        "e", 0, "metoprolol", DOSE, Frequency(count=Fraction(1, 8), per="h")
    )
    assert check_numerical(twice_daily, every_12h, kb) is None
    assert check_numerical(twice_daily, every_8h, kb) is not None


def test_numerical_qualitative_and_kinds(kb):
    high = prop("s", 0, "glucose", LAB, Qualitative(label="Elevated"))
    elevated = prop("e", 0, "glucose", LAB, Qualitative(label="elevated"))
    normal = prop("e", 0, "glucose", LAB, Qualitative(label="normal"))
    measured = lab("e", 0, 140, entity="glucose")
    assert check_numerical(high, elevated, kb) is None
    assert check_numerical(high, normal, kb) is not None
    assert check_numerical(high, measured, kb) is not None
    # presence-only propositions carry no value to compare
    assert check_numerical(prop("s", 0, "glucose", LAB), measured, kb) is None


def test_numerical_tolerance(kb):
    summary, record = lab("s", 0, "2.0"), lab("e", 0, "2.1")
    assert check_numerical(summary, record, kb, tau_num=0.05) is None
    assert check_numerical(summary, record, kb, tau_num=0.01) is not None


# Implication


def test_implication_fails_when_record_has_consequent(kb):
    summary = summary_of(prop("s", 0, "pneumonia", D))
    ehr = ehr_of(prop("e", 0, "pneumonia", D), prop("e", 1, "ceftriaxone", T))
    (failure,) = check_implication(summary, ehr, kb)
    assert failure.code is FailureCode.IMPLICATION_FAIL
    assert failure.severity is Severity.FAIL
    assert failure.proposition_ids == (("s", 0),)


def test_implication_resolves_classes(kb):
    ehr = ehr_of(prop("e", 0, "ceftriaxone", T))
    treated = summary_of(prop("s", 0, "pneumonia", D), prop("s", 1, "amoxicillin", T))
    assert check_implication(treated, ehr, kb) == []
    untreated = summary_of(prop("s", 0, "community_acquired_pneumonia", D))
    (failure,) = check_implication(untreated, ehr, kb)
    assert failure.severity is Severity.FAIL


def test_implication_ungrounded_consequent_is_warning(kb):
    summary = summary_of(prop("s", 0, "pneumonia", D))
    ehr = ehr_of(prop("e", 0, "pneumonia", D))
    (warning,) = check_implication(summary, ehr, kb)
    assert warning.severity is Severity.WARNING


def test_implication_ignores_negated_antecedent(kb):
    summary = summary_of(prop("s", 0, "pneumonia", D, negated=True))
    assert check_implication(summary, ehr_of(prop("e", 0, "ceftriaxone", T)), kb) == []


# Temporal


def test_temporal_order_reversed():
    summary = summary_of(
        prop("s", 0, "fever", STATUS, time=Marker.day_n(1)),
        prop("s", 1, "intubation", PROC, time=Marker.day_n(3)),
    )
    ehr = ehr_of(
        prop("e", 0, "fever", STATUS, time=Marker.day_n(4)),
        prop("e", 1, "intubation", PROC, time=Marker.day_n(2)),
    )
    (failure,) = check_temporal(summary, ehr, [matched(0, 0), matched(1, 1)])
    assert failure.code is FailureCode.TEMPORAL_FAIL
    assert failure.proposition_ids == (("s", 0), ("s", 1))


def test_temporal_skips_unknown_and_unmatched():
    summary = summary_of(
        prop("s", 0, "fever", STATUS),
        prop("s", 1, "sepsis", D, time=Marker.day_n(1)),
    )
    ehr = ehr_of(
        prop("e", 0, "fever", STATUS, time=Marker.day_n(4)),
        prop("e", 1, "sepsis", D, time=Marker.day_n(2)),
    )
    assert check_temporal(summary, ehr, [matched(0, 0), matched(1, 1)]) == []
    unmatched = MatchResult(
        summary_id=("s", 0), ehr_id=("e", 0), score=0.2, matched=False
    )
    assert check_temporal(summary, ehr, [unmatched, matched(1, 1)]) == []


def test_temporal_before_discharge_vs_until_discharge():
    stay = DocContext(admission=date(2024, 1, 1), discharge=date(2024, 1, 6))
    admission = Marker.at(Anchor.ADMISSION)
    discharge = Marker.at(Anchor.DISCHARGE)
    before = Interval(start=admission, end=discharge, end_inclusive=False)
    until = Interval(start=admission, end=discharge)
    summary = summary_of(
        prop("s", 0, "fever", STATUS, time=before),
        prop("s", 1, "discharge", AttributeKind.EVENT, time=discharge),
        context=stay,
    )
    ehr = ehr_of(
        prop("e", 0, "fever", STATUS, time=until),
        prop("e", 1, "discharge", AttributeKind.EVENT, time=discharge),
        context=stay,
    )
    assert len(check_temporal(summary, ehr, [matched(0, 0), matched(1, 1)])) == 1


# Exclusivity


def test_exclusive_states_at_same_time(kb):
    summary = summary_of(
        prop("s", 0, "intubation", PROC, time=Marker.day_n(2)),
        prop("s", 1, "room_air_breathing", STATUS, time=Marker.day_n(2)),
    )
    (failure,) = check_exclusivity(summary, kb)
    assert failure.code is FailureCode.EXCLUSIVITY_FAIL
    assert failure.proposition_ids == (("s", 0), ("s", 1))


def test_exclusive_states_over_overlapping_intervals(kb):
    early = Interval(start=Marker.day_n(1), end=Marker.day_n(4))
    late = Interval(start=Marker.day_n(3), end=Marker.day_n(6))
    summary = summary_of(
        prop("s", 0, "npo", STATUS, time=early),
        prop("s", 1, "oral_diet", STATUS, time=late),
    )
    assert len(check_exclusivity(summary, kb)) == 1


def test_exclusivity_passes_when_disjoint_unknown_or_negated(kb):
    day_1, day_5 = Marker.day_n(1), Marker.day_n(5)
    disjoint = summary_of(
        prop("s", 0, "npo", STATUS, time=day_1),
        prop("s", 1, "oral_diet", STATUS, time=day_5),
    )
    unknown = summary_of(prop("s", 0, "npo", STATUS), prop("s", 1, "oral_diet", STATUS))
    negated = summary_of(
        prop("s", 0, "npo", STATUS, time=day_1),
        prop("s", 1, "oral_diet", STATUS, time=day_1, negated=True),
    )
    assert check_exclusivity(disjoint, kb) == []
    assert check_exclusivity(unknown, kb) == []
    assert check_exclusivity(negated, kb) == []


# Presence


def test_presence_reports_key_omissions_only(kb):
    ehr = ehr_of(
        prop("e", 0, "pneumonia", D),
        prop("e", 1, "antibiotics", T),
        lab("e", 2, "2.1"),
    )
    (omission,) = check_presence(summary_of(prop("s", 0, "pneumonia", D)), ehr, kb)
    assert omission.ehr_id == ("e", 1)
    assert omission.entity == "antibiotics"
    assert omission.code is FailureCode.PRESENCE_FAIL


def test_presence_uses_class_equivalence_and_counts_negated_mentions(kb):
    ehr = ehr_of(prop("e", 0, "ceftriaxone", T), prop("e", 1, "heart_failure", D))
    summary = summary_of(
        prop("s", 0, "antibiotics", T),
        prop("s", 1, "heart_failure", D, negated=True),
    )
    assert check_presence(summary, ehr, kb) == []
    assert entities_equivalent("antibiotics", "ceftriaxone", kb)
    assert not entities_equivalent("ceftriaxone", "azithromycin", kb)


def test_presence_respects_key_attributes(kb):
    ehr = ehr_of(lab("e", 0, "2.1"))
    (omission,) = check_presence(summary_of(), ehr, kb, key_attributes=(LAB,))
    assert omission.attribute is LAB


# Verdicts


def test_confidence_halves_per_failure_and_clips():
    assert confidence(1.0, 0) == 0.99
    assert confidence(0.9, 1) == pytest.approx(0.45)
    assert confidence(0.9, 2) == pytest.approx(0.225)
    assert confidence(0.001, 0) == 0.01


def test_check_context_requires_full_match_cover(kb):
    summary = summary_of(prop("s", 0, "fever", STATUS), prop("s", 1, "sepsis", D))
    ehr = ehr_of(prop("e", 0, "fever", STATUS))
    with pytest.raises(ValidationError):
        CheckContext(summary=summary, ehr=ehr, matches=(matched(0, 0),), kb=kb)


def test_assign_verdicts(kb):
    summary = summary_of(
        lab("s", 0, "1.2"),
        prop("s", 1, "fever", STATUS),
        prop("s", 2, "delirium", STATUS),
    )
    ehr = ehr_of(
        lab("e", 0, "2.1"),
        prop("e", 1, "fever", STATUS),
        prop("e", 2, "sepsis", D),
    )
    matches = (
        matched(0, 0, score=0.95),
        matched(1, 1, score=1.0),
        MatchResult(summary_id=("s", 2), ehr_id=("e", 1), score=0.1, matched=False),
    )
    ctx = CheckContext(summary=summary, ehr=ehr, matches=matches, kb=kb)
    verdicts, omissions = assign_verdicts(ctx)

    creatinine, fever, delirium = verdicts
    assert creatinine.label is Label.NOT_SUPPORTED
    assert creatinine.failure_codes == (FailureCode.NUMERICAL_FAIL,)
    assert creatinine.confidence == pytest.approx(0.475)
    assert fever.label is Label.SUPPORTED
    assert fever.matched_ehr_id == ("e", 1)
    assert fever.confidence == 0.99
    assert delirium.failure_codes == (FailureCode.NO_EVIDENCE,)
    assert delirium.matched_ehr_id is None
    assert [o.entity for o in omissions] == ["sepsis"]


def test_failure_codes_accumulate(kb):
    stay = DocContext(admission=date(2024, 1, 1), discharge=date(2024, 1, 9))
    summary = summary_of(
        prop("s", 0, "intubation", PROC, time=Marker.day_n(2), negated=False),
        prop("s", 1, "room_air_breathing", STATUS, time=Marker.day_n(2)),
        context=stay,
    )
    ehr = ehr_of(
        prop("e", 0, "intubation", PROC, time=Marker.day_n(2), negated=True),
        prop("e", 1, "room_air_breathing", STATUS, time=Marker.day_n(2)),
        context=stay,
    )
    matches = (matched(0, 0), matched(1, 1))
    verdicts, _ = assign_verdicts(
        CheckContext(summary=summary, ehr=ehr, matches=matches, kb=kb)
    )
    assert verdicts[0].failure_codes == (
        FailureCode.NEGATION_FAIL,
        FailureCode.EXCLUSIVITY_FAIL,
    )
    assert verdicts[1].failure_codes == (FailureCode.EXCLUSIVITY_FAIL,)
