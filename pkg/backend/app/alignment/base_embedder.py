"""
Abstract base class for proposition embedders.
"""
from abc import ABC, abstractmethod

import numpy as np

from app.kb.knowledge_base import KnowledgeBase
from app.models.proposition import Proposition, PropositionSet


class Embedder(ABC):
    """Maps propositions to fixed-dimension non-negative vectors."""

    def __init__(self, config: dict, kb: KnowledgeBase):
        self.config = config
        self.kb = kb

    @property
    @abstractmethod
    def dimension(self) -> int:
        """Length of every vector this embedder returns."""

    @abstractmethod
    def embed(self, p: Proposition) -> np.ndarray:
        """Embeds one proposition."""

    def embed_set(self, propositions: PropositionSet) -> np.ndarray:
        """Row-stacked embeddings of a whole set, shape ``(len, dimension)``."""
        if not propositions.items:
            return np.zeros((0, self.dimension))
        return np.vstack([self.embed(p) for p in propositions.items])
