"""
Verification service for veriprop.

Runs one summary/EHR pair through extraction, alignment and the checks and
returns the verdict report.
"""
import logging
import time
from typing import Optional

from app.alignment.base_embedder import Embedder
from app.alignment.embedder_factory import EmbedderFactory
from app.alignment.matcher import match
from app.alignment.providers.precomputed_embedder import PrecomputedEmbedder
from app.checks.document_checks import check_presence
from app.checks.verdicts import CheckContext, build_verdicts, collect_failures
from app.extraction.pipeline import PropositionExtractor
from app.kb.knowledge_base import KnowledgeBase
from app.kb.loader import default_kb
from app.models.document import Document
from app.models.proposition import AttributeKind, PropositionSet
from app.models.verdict import Severity, VerdictReport
from backend.config import Settings, get_settings

logger = logging.getLogger(__name__)


class VerificationService:
    """
    Orchestrates the verification pipeline for one document pair at a time.

    The service holds no per-document state, so a single instance may be
    shared by worker threads.
    """

    def __init__(
        self,
        settings: Optional[Settings] = None,
        kb: Optional[KnowledgeBase] = None,
        embedder: Optional[Embedder] = None,
    ):
        self.settings = settings or get_settings()
        self.kb = kb or default_kb(self.settings.kb_dir)
        self.extractor = PropositionExtractor(self.kb, self.settings.extraction)
        self.embedder = embedder or EmbedderFactory.from_settings(
            self.settings.alignment, self.kb
        )
        self.key_attributes = tuple(
            AttributeKind(name) for name in self.settings.checks.key_attributes
        )

    def extract(self, document: Document) -> PropositionSet:
        return self.extractor.extract(document)

    def verify(self, summary: Document, ehr: Document) -> VerdictReport:
        """Extract both documents and verify the summary against the record."""
        return self.verify_sets(self.extract(summary), self.extract(ehr))

    def verify_sets(
        self, summary: PropositionSet, ehr: PropositionSet
    ) -> VerdictReport:
        """
        Verify already extracted proposition sets.

        Raises:
            EmbeddingCoverageError: precomputed embeddings miss a proposition
        """
        start_time = time.time()
        if isinstance(self.embedder, PrecomputedEmbedder):
            self.embedder.check_coverage(summary, ehr)

        matches = match(
            summary, ehr, self.kb, self.settings.alignment.tau_match, self.embedder
        )
        ctx = CheckContext(
            summary=summary,
            ehr=ehr,
            matches=tuple(matches),
            kb=self.kb,
            tau_num=self.settings.checks.tau_num,
            key_attributes=self.key_attributes,
            confidence_floor=self.settings.checks.confidence_floor,
            confidence_ceiling=self.settings.checks.confidence_ceiling,
        )
        failures = collect_failures(ctx)
        verdicts = build_verdicts(ctx, failures)
        omissions = check_presence(summary, ehr, self.kb, self.key_attributes)
        warnings = [f for f in failures if f.severity is Severity.WARNING]

        report = VerdictReport(
            doc_id=summary.doc_id,
            verdicts=tuple(verdicts),
            omissions=tuple(omissions),
            params=self.settings.effective_params(),
            warnings=tuple(warnings),
        )
        logger.info(
            "Verified summary",
            extra={
                "doc_id": summary.doc_id,
                "ehr_id": ehr.doc_id,
                "propositions": len(summary),
                "not_supported": len(report.not_supported),
                "omissions": len(omissions),
                "process_time": round(time.time() - start_time, 4),
            },
        )
        return report


def verify_documents(
    summary: Document,
    ehr: Document,
    settings: Optional[Settings] = None,
    kb: Optional[KnowledgeBase] = None,
) -> VerdictReport:
    """One-shot convenience wrapper around :class:`VerificationService`."""
    return VerificationService(settings, kb).verify(summary, ehr)
