"""
Tests for synthetic patient generation, fault injection and corpus bundles.

Every injected fault is checked against the real verifier: the fault's
expected failure code must show up where the gold record says it will.
"""
import json
from datetime import date
from fractions import Fraction

import pytest
from pydantic import ValidationError

from app.alignment.providers.hashed_embedder import HashedConceptEmbedder
from app.checks.document_checks import DEFAULT_KEY_ATTRIBUTES
from app.models.document import Document
from app.models.proposition import Anchor, AttributeKind, DocumentKind, Marker, Present
from app.models.verdict import FailureCode, Label
from app.services.errors import DataError, NoEligibleSite, UsageError
from app.services.verification_service import VerificationService
from app.simcorpus import (
    EXPECTED_CODES,
    FaultKind,
    FaultSpec,
    GoldRecord,
    PatientGenerator,
    document_seed,
    generate_corpus,
    generate_patient,
    inject_faults,
    load_fault_specs,
    write_bundle,
)
from app.simcorpus.faults import check_fault_plan
from app.simcorpus.generator import Fact, document_from_facts, facts_of


@pytest.fixture
def embedder(kb):
    return HashedConceptEmbedder({}, kb)


@pytest.fixture
def service(settings, kb, embedder):
    return VerificationService(settings, kb, embedder=embedder)


def codes_by_id(report):
    return {v.proposition_id: v.failure_codes for v in report.verdicts}


# Generation

def test_generation_is_deterministic(kb):
    first = generate_patient("7:0", kb)
    again = generate_patient("7:0", kb)
    other = generate_patient("7:1", kb)
    assert first == again
    assert first[0] != other[0]


def test_generated_record_shape(kb):
    ehr, summary = generate_patient("11:0", kb, index=3)
    assert ehr.doc_id == "p0003.ehr"
    assert summary.doc_id == "p0003.summary"
    assert ehr.kind is DocumentKind.EHR
    assert ehr.admission < ehr.discharge
    assert summary.admission == ehr.admission

    facts = facts_of(ehr, kb)
    assert 10 <= len(facts) <= 40
    keys = [f.key for f in facts]
    assert len(keys) == len(set(keys))
    entities = [f.entity for f in facts]
    for i, a in enumerate(entities):
        for b in entities[i + 1:]:
            assert not kb.exclusive_resolved(a, b)
    for rule in kb.implications:
        if any(kb.is_member(e, rule.antecedent) for e in entities):
            assert any(kb.is_member(e, rule.consequent) for e in entities)


def test_summary_keeps_key_facts(kb):
    ehr, summary = generate_patient("11:1", kb, keep_rate=0.0)
    ehr_keys = {f.key for f in facts_of(ehr, kb)}
    summary_keys = {f.key for f in facts_of(summary, kb)}
    assert summary_keys <= ehr_keys
    assert {k for k in ehr_keys if k[1] in DEFAULT_KEY_ATTRIBUTES} == summary_keys


def test_generator_rejects_bad_bounds(kb):
    with pytest.raises(ValueError):
        PatientGenerator(kb, size_params=(20, 10))


@pytest.mark.parametrize("seed", ["1:0", "2:0", "3:0"])
def test_faithful_summary_is_fully_supported(kb, service, seed):
    ehr, summary = generate_patient(seed, kb)
    report = service.verify(summary, ehr)
    labels = [v.label for v in report.verdicts]
    assert labels == [Label.SUPPORTED] * len(report.verdicts)
    assert report.omissions == ()


# Fault specs

def test_fault_spec_site_count():
    assert FaultSpec(kind="fabrication", rate=0).site_count(30) == 0
    assert FaultSpec(kind="fabrication", rate="0.01").site_count(30) == 1
    assert FaultSpec(kind="fabrication", rate=Fraction(1, 10)).site_count(35) == 3


def test_fault_spec_rate_bounds():
    with pytest.raises(ValidationError):
        FaultSpec(kind="fabrication", rate="1.5")
    with pytest.raises(UsageError):
        check_fault_plan(
            [
                FaultSpec(kind="fabrication", rate="0.6"),
                FaultSpec(kind="omission", rate="0.5"),
            ]
        )


def test_load_fault_specs():
    specs = load_fault_specs(
        {
            "faults": [
                {"kind": "negation_flip", "rate": "0.1"},
                {"kind": "omission", "rate": 0.05, "seed": 3},
            ]
        }
    )
    assert [s.kind for s in specs] == [FaultKind.NEGATION_FLIP, FaultKind.OMISSION]
    assert specs[1].seed == 3
    with pytest.raises(DataError, match="fault spec 0"):
        load_fault_specs([{"kind": "typo", "rate": 0.1}])
    with pytest.raises(UsageError):
        load_fault_specs(
            [{"kind": "omission", "rate": 0.7}, {"kind": "fabrication", "rate": 0.7}]
        )


# Injection

def inject_somewhere(kb, embedder, kind, tries=30):
    """Inject one fault kind into the first patient that has a site for it."""
    spec = FaultSpec(kind=kind, rate="0.02")
    for attempt in range(tries):
        pair = generate_patient(f"fault:{attempt}", kb)
        result = inject_faults(pair, [spec], kb, strict=False, embedder=embedder)
        if not result.skipped:
            return result
    pytest.fail(f"no patient offered a site for {kind.value}")


@pytest.mark.slow
@pytest.mark.parametrize("kind", list(FaultKind))
def test_injected_fault_is_detected(kb, embedder, service, kind):
    result = inject_somewhere(kb, embedder, kind)
    (expected,) = result.gold.expected
    assert expected.code is EXPECTED_CODES[kind]

    report = service.verify(result.summary, result.ehr)
    found = codes_by_id(report)
    for pid in expected.ids:
        assert expected.code in found[pid]
    reported_omissions = {o.ehr_id for o in report.omissions}
    assert set(expected.omissions) <= reported_omissions
    if kind is FaultKind.OMISSION:
        assert expected.omissions


def test_gold_labels_follow_site_codes(kb, embedder):
    result = inject_somewhere(kb, embedder, FaultKind.NEGATION_FLIP)
    gold = result.gold
    ids = [label.id for label in gold.labels]
    assert ids == [(gold.doc_id, i) for i in range(len(gold.labels))]
    (flipped,) = gold.expected[0].ids
    assert gold.codes_of(flipped) == (FailureCode.NEGATION_FAIL,)
    for label in gold.labels:
        expected = Label.NOT_SUPPORTED if gold.codes_of(label.id) else Label.SUPPORTED
        assert label.gold is expected
    assert GoldRecord.from_json_dict(gold.to_json_dict()) == gold


def tiny_pair():
    admission, discharge = date(2024, 1, 1), date(2024, 1, 8)
    facts = [
        Fact(
            entity="pneumonia",
            kind=AttributeKind.DIAGNOSIS,
            value=Present(),
            time=Marker.at(Anchor.ADMISSION),
        )
    ]
    ehr = document_from_facts("t.ehr", DocumentKind.EHR, facts, admission, discharge)
    summary = document_from_facts(
        "t.summary", DocumentKind.SUMMARY, facts, admission, discharge
    )
    return ehr, summary


def test_fault_without_site(kb):
    spec = FaultSpec(kind="temporal_swap", rate="0.5")
    with pytest.raises(NoEligibleSite):
        inject_faults(tiny_pair(), [spec], kb)
    result = inject_faults(tiny_pair(), [spec], kb, strict=False)
    assert result.skipped == (FaultKind.TEMPORAL_SWAP,)
    assert [label.gold for label in result.gold.labels] == [Label.SUPPORTED]


def test_injection_needs_generator_documents(kb):
    ehr, _ = tiny_pair()
    plain = Document(
        doc_id="t.summary",
        kind="summary",
        structured=[{"entity": "fever", "attribute": "status"}],
    )
    with pytest.raises(DataError):
        inject_faults((ehr, plain), [], kb)


# Corpus bundles

def test_corpus_is_independent_of_worker_count(kb):
    faults = [FaultSpec(kind="fabrication", rate="0.1")]
    serial = generate_corpus(5, 3, kb, faults=faults, workers=1)
    parallel = generate_corpus(5, 3, kb, faults=faults, workers=3)
    assert serial == parallel
    seeds = [doc.seed for doc in serial.documents]
    assert seeds == [document_seed(5, i) for i in range(3)]


def test_write_bundle(kb, tmp_path):
    faults = [FaultSpec(kind="omission", rate="0.1")]
    corpus = generate_corpus("b", 2, kb, faults=faults)
    write_bundle(corpus, tmp_path)

    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == "b"
    assert manifest["documents"] == 2
    assert manifest["faults"] == [{"kind": "omission", "rate": "0.1", "seed": 0}]
    assert manifest["document_seeds"]["p0001.summary"] == "b:1"

    for name in (
        "ehr/p0000.ehr.json",
        "summary/p0000.summary.json",
        "gold/p0000.summary.json",
    ):
        assert (tmp_path / name).is_file()
    gold = json.loads((tmp_path / "gold/p0001.summary.json").read_text())
    assert gold["ehr_id"] == "p0001.ehr"
    assert {"id", "gold", "codes"} <= set(gold["labels"][0])
