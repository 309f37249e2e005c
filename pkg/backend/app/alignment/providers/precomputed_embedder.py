"""
Embedder backed by an external JSON-lines vector file.

Each line is ``{"prop_id": [doc_id, index], "vector": [...]}``. Vectors must
share one dimension and be non-negative; every proposition that is embedded
must have a line, otherwise EmbeddingCoverageError is raised.
"""
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

import numpy as np

from app.alignment.base_embedder import Embedder
from app.kb.knowledge_base import KnowledgeBase
from app.models.proposition import Proposition, PropositionId, PropositionSet
from app.services.errors import DataError, EmbeddingCoverageError

logger = logging.getLogger(__name__)


class PrecomputedEmbedder(Embedder):
    """
    Looks vectors up by proposition id.

    Config keys:
        embeddings_file: path of the JSON-lines file
    """

    def __init__(self, config: dict, kb: KnowledgeBase):
        super().__init__(config, kb)
        path = config.get("embeddings_file")
        if not path:
            raise DataError("precomputed embedder requires an embeddings_file")
        self.path = Path(path)
        self._vectors, self._dimension = self._load(self.path)
        logger.info(
            "Loaded precomputed embeddings",
            extra={
                "embeddings_file": str(self.path),
                "vectors": len(self._vectors),
                "dimension": self._dimension,
            },
        )

    @staticmethod
    def _load(path: Path) -> Tuple[Dict[PropositionId, np.ndarray], int]:
        vectors: Dict[PropositionId, np.ndarray] = {}
        dimension = 0
        try:
            handle = open(path, encoding="utf-8")
        except OSError as e:
            raise DataError(
                f"cannot read embeddings file: {e.strerror}",
                path=str(path),
                original_exception=e,
            ) from e
        with handle:
            for number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    doc_id, index = record["prop_id"]
                    vector = np.asarray(record["vector"], dtype=np.float64)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                    raise DataError(
                        f"malformed embedding record: {e}",
                        path=str(path),
                        line=number,
                        original_exception=e,
                    ) from e
                if vector.ndim != 1 or vector.size == 0:
                    raise DataError(
                        "embedding vector must be a non-empty list",
                        path=str(path),
                        line=number,
                    )
                if np.any(vector < 0) or not np.all(np.isfinite(vector)):
                    raise DataError(
                        "embedding components must be finite and non-negative",
                        path=str(path),
                        line=number,
                    )
                if dimension and vector.size != dimension:
                    raise DataError(
                        f"embedding dimension {vector.size} differs from {dimension}",
                        path=str(path),
                        line=number,
                    )
                dimension = vector.size
                vectors[(str(doc_id), int(index))] = vector
        if not vectors:
            raise DataError("embeddings file is empty", path=str(path))
        return vectors, dimension

    @property
    def dimension(self) -> int:
        return self._dimension

    def missing(self, sets: Iterable[PropositionSet]) -> List[PropositionId]:
        return [
            tuple(p.id)
            for ps in sets
            for p in ps.items
            if tuple(p.id) not in self._vectors
        ]

    def check_coverage(self, *sets: PropositionSet) -> None:
        """
        Raises:
            EmbeddingCoverageError: some proposition has no vector
        """
        absent = self.missing(sets)
        if absent:
            shown = ", ".join(f"{d}#{i}" for d, i in absent[:5])
            more = f" and {len(absent) - 5} more" if len(absent) > 5 else ""
            raise EmbeddingCoverageError(
                f"embeddings file does not cover {len(absent)} propositions: "
                f"{shown}{more}",
                path=str(self.path),
            )

    def embed(self, p: Proposition) -> np.ndarray:
        vector = self._vectors.get(tuple(p.id))
        if vector is None:
            raise EmbeddingCoverageError(
                f"no embedding for proposition {p.id[0]}#{p.id[1]}",
                path=str(self.path),
            )
        return vector
