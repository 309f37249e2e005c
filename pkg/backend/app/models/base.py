"""Shared pydantic base for immutable domain records."""
from pydantic import BaseModel, ConfigDict


class FrozenModel(BaseModel):
    """Immutable, hashable record; rejects unknown fields."""

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)
