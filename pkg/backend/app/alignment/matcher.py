"""
Cosine similarity and best-counterpart matching.
"""
import logging
from typing import List, Optional

import numpy as np

from app.alignment.base_embedder import Embedder
from app.alignment.providers.hashed_embedder import HashedConceptEmbedder
from app.kb.knowledge_base import KnowledgeBase
from app.models.proposition import Proposition, PropositionSet
from app.models.verdict import MatchResult
from app.services.errors import ShapeMismatch, ZeroVector

__all__ = ["cosine", "embed", "match", "similarity_matrix"]

logger = logging.getLogger(__name__)


def embed(
    p: Proposition, kb: KnowledgeBase, config: Optional[dict] = None
) -> np.ndarray:
    """Embed one proposition with the default hashed embedder."""
    return HashedConceptEmbedder(config or {}, kb).embed(p)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """
    Cosine similarity of two non-negative vectors, in [0, 1].

    Raises:
        ShapeMismatch: the vectors differ in shape
        ZeroVector: both vectors are zero
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ShapeMismatch(f"cannot compare vectors of shape {u.shape} and {v.shape}")
    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0 and norm_v == 0:
        raise ZeroVector("cosine similarity of two zero vectors is undefined")
    if norm_u == 0 or norm_v == 0:
        return 0.0
    value = float(np.dot(u, v) / (norm_u * norm_v))
    return min(1.0, max(0.0, value))


def similarity_matrix(
    summary_vectors: np.ndarray, ehr_vectors: np.ndarray
) -> np.ndarray:
    """All-pairs cosine scores, shape ``(m, n)``; two zero rows score 0."""
    scores = np.zeros((len(summary_vectors), len(ehr_vectors)))
    for i, u in enumerate(summary_vectors):
        for j, v in enumerate(ehr_vectors):
            try:
                scores[i, j] = cosine(u, v)
            except ZeroVector:
                scores[i, j] = 0.0
    return scores


def match(
    summary: PropositionSet,
    ehr: PropositionSet,
    kb: KnowledgeBase,
    tau_match: float = 0.5,
    embedder: Optional[Embedder] = None,
) -> List[MatchResult]:
    """
    Pick each summary proposition's most similar EHR proposition.

    Ties go to the lowest EHR index. One EHR proposition may be chosen by
    several summary propositions. With no EHR propositions every result is
    unmatched with score 0.
    """
    embedder = embedder or HashedConceptEmbedder({}, kb)
    summary_vectors = embedder.embed_set(summary)
    ehr_vectors = embedder.embed_set(ehr)
    scores = similarity_matrix(summary_vectors, ehr_vectors)

    results: List[MatchResult] = []
    for i, p in enumerate(summary.items):
        if not ehr.items:
            results.append(MatchResult(summary_id=p.id))
            continue
        best = int(np.argmax(scores[i]))
        score = float(scores[i, best])
        results.append(
            MatchResult(
                summary_id=p.id,
                ehr_id=ehr.items[best].id,
                score=score,
                matched=score >= tau_match,
            )
        )
    logger.debug(
        "Matched propositions",
        extra={
            "summary_doc": summary.doc_id,
            "ehr_doc": ehr.doc_id,
            "matched": sum(r.matched for r in results),
            "total": len(results),
        },
    )
    return results
