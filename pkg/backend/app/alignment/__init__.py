"""
Proposition embedding and summary-to-EHR alignment.
"""

from .base_embedder import Embedder
from .embedder_factory import EmbedderFactory
from .matcher import cosine, embed, match, similarity_matrix
from .providers import HashedConceptEmbedder, PrecomputedEmbedder

__all__ = [
    "Embedder",
    "EmbedderFactory",
    "HashedConceptEmbedder",
    "PrecomputedEmbedder",
    "cosine",
    "embed",
    "match",
    "similarity_matrix",
]
