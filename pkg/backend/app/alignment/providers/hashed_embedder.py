"""
Deterministic hashed concept embedder.

Each proposition becomes a bag of weighted string features (entity concept,
entity character 3-grams, attribute kind, value, time, negation) hashed into
a fixed-size count vector with keyed blake2b and L2-normalized. Quantities are
featurized in base units so "0.5 g" and "500 mg" embed identically.
"""
import hashlib
import json
from collections import Counter
from typing import Dict

import numpy as np

from app.alignment.base_embedder import Embedder
from app.kb.knowledge_base import KnowledgeBase
from app.models.codec import encode_time
from app.models.proposition import (
    Frequency,
    Present,
    Proposition,
    Qualitative,
    Quantity,
    QuantityPair,
)
from app.models.rational import format_rational
from app.services.errors import DataError

ENTITY_WEIGHT = 6
ATTRIBUTE_WEIGHT = 2


class HashedConceptEmbedder(Embedder):
    """
    Concept-aware bag-of-features embedder.

    Config keys:
        dimension: vector length (default 4096)
        hash_seed: blake2b key (default "veriprop-v1")
    """

    def __init__(self, config: dict, kb: KnowledgeBase):
        super().__init__(config, kb)
        self._dimension = int(config.get("dimension", 4096))
        self._key = str(config.get("hash_seed", "veriprop-v1")).encode("utf-8")[:64]
        self._buckets: Dict[str, int] = {}

    @property
    def dimension(self) -> int:
        return self._dimension

    def bucket(self, feature: str) -> int:
        index = self._buckets.get(feature)
        if index is None:
            digest = hashlib.blake2b(
                feature.encode("utf-8"), digest_size=8, key=self._key
            ).digest()
            index = int.from_bytes(digest, "little") % self._dimension
            self._buckets[feature] = index
        return index

    def features(self, p: Proposition) -> Counter:
        found: Counter = Counter()
        entity = self.kb.normalize_concept(p.entity)
        found[f"e:{entity}"] += ENTITY_WEIGHT
        padded = f"#{entity}#"
        for i in range(len(padded) - 2):
            found[f"g:{padded[i:i + 3]}"] += 1
        found[f"a:{p.attribute.kind.value}"] += ATTRIBUTE_WEIGHT

        value = p.value
        if isinstance(value, Quantity):
            found.update(self._magnitude_features("v", value.magnitude, value.unit))
        elif isinstance(value, QuantityPair):
            found.update(self._magnitude_features("v1", value.first, value.unit))
            found.update(self._magnitude_features("v2", value.second, value.unit))
        elif isinstance(value, Qualitative):
            found[f"l:{self.kb.normalize_concept(value.label)}"] += 1
        elif isinstance(value, Frequency):
            try:
                found[f"r:{format_rational(self.kb.frequency_rate(value))}"] += 1
            except DataError:
                found[f"r:{format_rational(value.count)}/{value.per}"] += 1
        elif isinstance(value, Present):
            found[f"p:{value.flag}"] += 1

        found[f"t:{json.dumps(encode_time(p.time), sort_keys=True)}"] += 1
        if p.negated:
            found["neg"] += 1
        return found

    def _magnitude_features(self, prefix: str, magnitude, unit: str) -> Counter:
        found: Counter = Counter()
        try:
            base, dimension = self.kb.units.to_base(magnitude, unit)
        except DataError:
            found[f"{prefix}:{unit}:{format_rational(magnitude)}"] += 1
            found[f"u:{unit}"] += 1
            return found
        found[f"{prefix}:{dimension}:{format_rational(base)}"] += 1
        found[f"d:{dimension}"] += 1
        return found

    def embed(self, p: Proposition) -> np.ndarray:
        vector = np.zeros(self._dimension, dtype=np.float64)
        for feature, weight in sorted(self.features(p).items()):
            vector[self.bucket(feature)] += weight
        norm = np.linalg.norm(vector)
        return vector / norm if norm > 0 else vector
