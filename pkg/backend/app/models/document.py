"""
Input documents: free-text notes and structured record entries.
"""
from datetime import date
from typing import Any, List, Optional

from pydantic import BaseModel, ConfigDict

from app.models.proposition import AttributeKind, DocContext, DocumentKind


class StructuredEntry(BaseModel):
    """
    One structured record row.

    ``value`` and ``time`` accept either tagged objects in the proposition JSON
    format or plain numbers/strings that go through the text parsers
    ("20", "120/80", "twice daily", "day 2", "before discharge").
    """
    model_config = ConfigDict(extra="forbid")

    entity: str
    attribute: AttributeKind
    value: Any = None
    unit: Optional[str] = None
    time: Any = None
    negated: bool = False


class Document(BaseModel):
    """A summary or EHR document as read from JSON."""
    model_config = ConfigDict(extra="forbid")

    doc_id: str
    kind: DocumentKind
    text: Optional[str] = None
    structured: Optional[List[StructuredEntry]] = None
    admission: Optional[date] = None
    discharge: Optional[date] = None

    @property
    def context(self) -> DocContext:
        return DocContext(admission=self.admission, discharge=self.discharge)

    def is_empty(self) -> bool:
        return not (self.text and self.text.strip()) and not self.structured

    def to_json_dict(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)
