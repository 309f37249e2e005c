"""
Corpus bundles: many seeded patients, optionally corrupted, written as

    <dir>/ehr/<doc>.json
    <dir>/summary/<doc>.json
    <dir>/gold/<doc>.json
    <dir>/manifest.json
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from app.alignment.base_embedder import Embedder
from app.checks.document_checks import DEFAULT_KEY_ATTRIBUTES
from app.kb.knowledge_base import KnowledgeBase
from app.models.base import FrozenModel
from app.models.codec import dumps
from app.models.document import Document
from app.models.proposition import AttributeKind
from app.simcorpus.faults import (
    FaultInjector,
    FaultKind,
    FaultSpec,
    GoldRecord,
    check_fault_plan,
)
from app.simcorpus.generator import (
    DEFAULT_KEEP_RATE,
    DEFAULT_SIZE,
    PatientGenerator,
    Seed,
    SizeParams,
)

logger = logging.getLogger(__name__)

BUNDLE_DIRS = ("ehr", "summary", "gold")
MANIFEST_NAME = "manifest.json"


class CorpusDocument(FrozenModel):
    index: int
    seed: str
    ehr: Document
    summary: Document
    gold: GoldRecord
    skipped: Tuple[FaultKind, ...] = ()


class Corpus(FrozenModel):
    seed: str
    faults: Tuple[FaultSpec, ...] = ()
    size_params: Tuple[int, int] = DEFAULT_SIZE
    keep_rate: float = DEFAULT_KEEP_RATE
    documents: Tuple[CorpusDocument, ...] = ()

    def manifest(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "documents": len(self.documents),
            "size_params": list(self.size_params),
            "keep_rate": self.keep_rate,
            "faults": [spec.to_json_dict() for spec in self.faults],
            "document_seeds": {doc.summary.doc_id: doc.seed for doc in self.documents},
            "skipped": {
                doc.summary.doc_id: [kind.value for kind in doc.skipped]
                for doc in self.documents
                if doc.skipped
            },
        }


def document_seed(seed: Seed, index: int) -> str:
    """Per-document seed derived from the run seed and the document index."""
    return f"{seed}:{index}"


def generate_document(
    generator: PatientGenerator,
    seed: Seed,
    index: int,
    faults: Sequence[FaultSpec] = (),
    embedder: Optional[Embedder] = None,
    tau_match: float = 0.5,
) -> CorpusDocument:
    doc_seed = document_seed(seed, index)
    ehr, summary = generator.generate(doc_seed, index)
    injector = FaultInjector(
        generator.kb, ehr, summary,
        key_attributes=generator.key_attributes,
        embedder=embedder,
        tau_match=tau_match,
    )
    result = injector.inject(faults, strict=False)
    return CorpusDocument(
        index=index,
        seed=doc_seed,
        ehr=result.ehr,
        summary=result.summary,
        gold=result.gold,
        skipped=result.skipped,
    )


def generate_corpus(
    seed: Seed,
    docs: int,
    kb: KnowledgeBase,
    faults: Sequence[FaultSpec] = (),
    size_params: SizeParams = DEFAULT_SIZE,
    keep_rate: float = DEFAULT_KEEP_RATE,
    workers: int = 1,
    embedder: Optional[Embedder] = None,
    tau_match: float = 0.5,
    key_attributes: Iterable[AttributeKind] = DEFAULT_KEY_ATTRIBUTES,
) -> Corpus:
    """
    Generate ``docs`` patients with bounded parallelism.

    Documents come back in index order whatever order the workers finish in.
    Faults without an eligible site in a document are recorded as skipped.

    Raises:
        KBTooSmall: the knowledge base cannot supply the requested records
        UsageError: the fault rates add up to more than one
    """
    check_fault_plan(faults)
    start_time = time.time()
    generator = PatientGenerator(kb, size_params, keep_rate, key_attributes)

    def build(index: int) -> CorpusDocument:
        return generate_document(generator, seed, index, faults, embedder, tau_match)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        documents = list(pool.map(build, range(docs)))

    corpus = Corpus(
        seed=str(seed),
        faults=tuple(faults),
        size_params=tuple(size_params),
        keep_rate=keep_rate,
        documents=tuple(documents),
    )
    logger.info(
        "Generated corpus",
        extra={
            "seed": str(seed),
            "documents": docs,
            "faults": [spec.kind.value for spec in faults],
            "skipped": sum(len(doc.skipped) for doc in documents),
            "process_time": round(time.time() - start_time, 4),
        },
    )
    return corpus


def bundle_files(corpus: Corpus) -> List[Tuple[str, str]]:
    """Relative path and text of every file of the bundle, manifest last."""
    files: List[Tuple[str, str]] = []
    for doc in corpus.documents:
        files.append((f"ehr/{doc.ehr.doc_id}.json", dumps(doc.ehr.to_json_dict())))
        summary = dumps(doc.summary.to_json_dict())
        files.append((f"summary/{doc.summary.doc_id}.json", summary))
        gold = dumps(doc.gold.to_json_dict())
        files.append((f"gold/{doc.summary.doc_id}.json", gold))
    files.append((MANIFEST_NAME, dumps(corpus.manifest())))
    return files


def write_bundle(corpus: Corpus, directory: Path) -> None:
    """Write the bundle under ``directory``, which must exist."""
    directory = Path(directory)
    for name in BUNDLE_DIRS:
        (directory / name).mkdir(parents=True, exist_ok=True)
    for relative, text in bundle_files(corpus):
        (directory / relative).write_text(text, encoding="utf-8")
