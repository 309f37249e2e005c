"""
Unit tests for embedders and proposition matching.
"""
import json

import numpy as np
import pytest

from app.alignment.embedder_factory import EmbedderFactory
from app.alignment.matcher import cosine, embed, match, similarity_matrix
from app.alignment.providers.hashed_embedder import HashedConceptEmbedder
from app.alignment.providers.precomputed_embedder import PrecomputedEmbedder
from app.models.proposition import (
    Attribute,
    AttributeKind,
    DocumentKind,
    Marker,
    Present,
    Proposition,
    PropositionSet,
    Quantity,
)
from app.services.errors import (
    DataError,
    EmbeddingCoverageError,
    ShapeMismatch,
    UsageError,
    ZeroVector,
)
from backend.config import AlignmentSettings


def prop(doc, index, entity, kind, value=None, time=None, negated=False):
    return Proposition(
        id=(doc, index),
        entity=entity,
        attribute=Attribute(kind=kind),
        value=value or Present(),
        time=time or Marker.day_n(1),
        negated=negated,
    )


def dose(doc, index, magnitude, unit):
    value = Quantity(magnitude=magnitude, unit=unit)
    return prop(doc, index, "ceftriaxone", AttributeKind.DOSAGE, value)


def as_set(doc, kind, *items):
    return PropositionSet(doc_id=doc, kind=kind, items=items)


def test_cosine_bounds():
    assert cosine(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == 0.0
    assert cosine(np.array([0.0, 0.0]), np.array([0.0, 3.0])) == 0.0


def test_cosine_errors():
    with pytest.raises(ZeroVector):
        cosine(np.zeros(3), np.zeros(3))
    with pytest.raises(ShapeMismatch):
        cosine(np.ones(2), np.ones(3))


def test_similarity_matrix_scores_zero_rows_as_zero():
    scores = similarity_matrix(
        np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([[0.0, 0.0]])
    )
    assert scores.shape == (2, 1)
    assert scores.tolist() == [[0.0], [0.0]]


def test_hashed_vectors_are_unit_norm_and_non_negative(kb):
    vector = embed(dose("s", 0, "0.5", "g"), kb)
    assert vector.shape == (4096,)
    assert np.all(vector >= 0)
    assert np.linalg.norm(vector) == pytest.approx(1.0)


def test_hashed_embedding_ignores_unit_paraphrase(kb):
    embedder = HashedConceptEmbedder({}, kb)
    grams = embedder.embed(dose("s", 0, "0.5", "g"))
    milligrams = embedder.embed(dose("e", 3, 500, "mg"))
    assert np.array_equal(grams, milligrams)


def test_hashed_embedding_is_deterministic(kb):
    p = prop("s", 0, "pneumonia", AttributeKind.DIAGNOSIS)
    first = HashedConceptEmbedder({"dimension": 512}, kb).embed(p)
    second = HashedConceptEmbedder({"dimension": 512}, kb).embed(p)
    other_key = HashedConceptEmbedder(
        {"dimension": 512, "hash_seed": "another"}, kb
    ).embed(p)
    assert first.shape == (512,)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, other_key)


def test_negation_changes_embedding(kb):
    embedder = HashedConceptEmbedder({}, kb)
    affirmed = embedder.embed(prop("s", 0, "fever", AttributeKind.STATUS))
    negated = embedder.embed(prop("s", 0, "fever", AttributeKind.STATUS, negated=True))
    assert 0.5 < cosine(affirmed, negated) < 1.0


def test_match_picks_best_counterpart(kb):
    summary = as_set("s", DocumentKind.SUMMARY, dose("s", 0, "0.5", "g"))
    ehr = as_set(
        "e",
        DocumentKind.EHR,
        prop("e", 0, "pneumonia", AttributeKind.DIAGNOSIS),
        dose("e", 1, 500, "mg"),
    )
    (result,) = match(summary, ehr, kb)
    assert result.summary_id == ("s", 0)
    assert result.ehr_id == ("e", 1)
    assert result.matched
    assert result.score == pytest.approx(1.0)


def test_match_ties_go_to_lowest_index(kb):
    summary = as_set(
        "s", DocumentKind.SUMMARY, prop("s", 0, "fever", AttributeKind.STATUS)
    )
    ehr = as_set(
        "e",
        DocumentKind.EHR,
        prop("e", 0, "fever", AttributeKind.STATUS),
        prop("e", 1, "fever", AttributeKind.STATUS),
    )
    assert match(summary, ehr, kb)[0].ehr_id == ("e", 0)


def test_match_below_threshold_is_unmatched(kb):
    creatinine = Quantity(magnitude=1, unit="mg/dL")
    summary = as_set(
        "s",
        DocumentKind.SUMMARY,
        prop("s", 0, "creatinine", AttributeKind.LAB_VALUE, creatinine),
    )
    ehr = as_set(
        "e", DocumentKind.EHR, prop("e", 0, "pneumonia", AttributeKind.DIAGNOSIS)
    )
    (result,) = match(summary, ehr, kb, tau_match=0.5)
    assert not result.matched
    assert result.score < 0.5


def test_match_against_empty_record(kb):
    summary = as_set(
        "s", DocumentKind.SUMMARY, prop("s", 0, "fever", AttributeKind.STATUS)
    )
    (result,) = match(summary, as_set("e", DocumentKind.EHR), kb)
    assert result.ehr_id is None
    assert result.score == 0.0
    assert not result.matched


def test_factory(kb):
    assert EmbedderFactory.available() == ["hashed", "precomputed"]
    embedder = EmbedderFactory.from_settings(AlignmentSettings(dimension=64), kb)
    assert isinstance(embedder, HashedConceptEmbedder)
    assert embedder.dimension == 64
    with pytest.raises(UsageError):
        EmbedderFactory.create_embedder("word2vec", {}, kb)


def write_vectors(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


def test_precomputed_embedder_looks_up_ids(kb, tmp_path):
    path = write_vectors(
        tmp_path / "vectors.jsonl",
        [
            {"prop_id": ["s", 0], "vector": [1, 0, 0]},
            {"prop_id": ["e", 0], "vector": [0, 1, 0]},
            {"prop_id": ["e", 1], "vector": [2, 0, 0]},
        ],
    )
    embedder = PrecomputedEmbedder({"embeddings_file": str(path)}, kb)
    summary = as_set(
        "s", DocumentKind.SUMMARY, prop("s", 0, "fever", AttributeKind.STATUS)
    )
    ehr = as_set(
        "e",
        DocumentKind.EHR,
        prop("e", 0, "fever", AttributeKind.STATUS),
        prop("e", 1, "sepsis", AttributeKind.DIAGNOSIS),
    )
    assert embedder.dimension == 3
    (result,) = match(summary, ehr, kb, embedder=embedder)
    assert result.ehr_id == ("e", 1)


def test_precomputed_embedder_reports_missing_ids(kb, tmp_path):
    path = write_vectors(
        tmp_path / "vectors.jsonl", [{"prop_id": ["s", 0], "vector": [1, 0]}]
    )
    embedder = PrecomputedEmbedder({"embeddings_file": str(path)}, kb)
    ehr = as_set("e", DocumentKind.EHR, prop("e", 0, "fever", AttributeKind.STATUS))
    assert embedder.missing([ehr]) == [("e", 0)]
    with pytest.raises(EmbeddingCoverageError):
        embedder.check_coverage(ehr)


@pytest.mark.parametrize(
    "records,line",
    [
        ([{"prop_id": ["s", 0], "vector": [1, -1]}], 1),
        (
            [
                {"prop_id": ["s", 0], "vector": [1, 0]},
                {"prop_id": ["s", 1], "vector": [1, 0, 0]},
            ],
            2,
        ),
        ([{"vector": [1]}], 1),
    ],
)
def test_precomputed_embedder_rejects_bad_records(kb, tmp_path, records, line):
    path = write_vectors(tmp_path / "vectors.jsonl", records)
    with pytest.raises(DataError) as excinfo:
        PrecomputedEmbedder({"embeddings_file": str(path)}, kb)
    assert excinfo.value.line == line


def test_precomputed_embedder_file_errors(kb, tmp_path):
    with pytest.raises(DataError):
        PrecomputedEmbedder({"embeddings_file": str(tmp_path / "absent.jsonl")}, kb)
    with pytest.raises(DataError, match="empty"):
        empty = write_vectors(tmp_path / "empty.jsonl", [])
        PrecomputedEmbedder({"embeddings_file": str(empty)}, kb)
    with pytest.raises(DataError):
        PrecomputedEmbedder({}, kb)
