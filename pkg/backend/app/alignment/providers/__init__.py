from .hashed_embedder import HashedConceptEmbedder
from .precomputed_embedder import PrecomputedEmbedder

__all__ = ["HashedConceptEmbedder", "PrecomputedEmbedder"]
