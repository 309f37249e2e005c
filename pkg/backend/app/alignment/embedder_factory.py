"""
Embedder factory.

This module provides a factory for creating embedder instances by name.
"""
from typing import Dict, Type

from app.alignment.base_embedder import Embedder
from app.alignment.providers.hashed_embedder import HashedConceptEmbedder
from app.alignment.providers.precomputed_embedder import PrecomputedEmbedder
from app.kb.knowledge_base import KnowledgeBase
from app.services.errors import UsageError
from backend.config import AlignmentSettings


class EmbedderFactory:
    """Factory for creating Embedder instances based on configuration."""

    _providers: Dict[str, Type[Embedder]] = {
        "hashed": HashedConceptEmbedder,
        "precomputed": PrecomputedEmbedder,
    }

    @classmethod
    def create_embedder(
        cls, provider_name: str, config: dict, kb: KnowledgeBase
    ) -> Embedder:
        """Creates an Embedder instance for the specified provider."""
        provider_class = cls._providers.get(provider_name)
        if not provider_class:
            raise UsageError(f"Unknown embedder: {provider_name}")
        return provider_class(config, kb)

    @classmethod
    def from_settings(cls, settings: AlignmentSettings, kb: KnowledgeBase) -> Embedder:
        """Creates the embedder the alignment settings select."""
        return cls.create_embedder(settings.embedder, settings.model_dump(), kb)

    @classmethod
    def available(cls) -> list:
        return sorted(cls._providers)
