"""
Proposition data model for veriprop.

A proposition is one atomic clinical claim ``(entity, attribute, value, time)``
plus a negation flag and the span it was read from. Every other module
(extraction, alignment, checks, corpus generation) exchanges these records.
"""
from datetime import date
from enum import Enum
from fractions import Fraction
from typing import Annotated, Literal, Optional, Tuple, Union

from pydantic import Field

from app.models.base import FrozenModel
from app.models.rational import Rational

# Canonical concept token: lowercase, no whitespace.
ConceptId = str
PropositionId = Tuple[str, int]


class AttributeKind(str, Enum):
    """Closed set of attribute kinds the checks dispatch on."""
    DIAGNOSIS = "diagnosis"
    MEDICATION = "medication"
    DOSAGE = "dosage"
    LAB_VALUE = "lab_value"
    PROCEDURE = "procedure"
    TREATMENT = "treatment"
    STATUS = "status"
    EVENT = "event"


class DocumentKind(str, Enum):
    """Which side of the verification a document sits on."""
    SUMMARY = "summary"
    EHR = "ehr"


class Attribute(FrozenModel):
    """Attribute kind plus the cue phrase it was inferred from."""
    kind: AttributeKind
    raw_cue: str = ""


# Values

class Quantity(FrozenModel):
    kind: Literal["quantity"] = "quantity"
    magnitude: Rational
    unit: str = ""


class QuantityPair(FrozenModel):
    """Composite reading such as a blood pressure of 120/80."""
    kind: Literal["quantity_pair"] = "quantity_pair"
    first: Rational
    second: Rational
    unit: str = "mmHg"


class Qualitative(FrozenModel):
    kind: Literal["qualitative"] = "qualitative"
    label: str


class Frequency(FrozenModel):
    """``count`` occurrences per one ``per`` time unit."""
    kind: Literal["frequency"] = "frequency"
    count: Rational
    per: str = "day"


class Present(FrozenModel):
    kind: Literal["present"] = "present"
    flag: bool = True


Value = Annotated[
    Union[Quantity, QuantityPair, Qualitative, Frequency, Present],
    Field(discriminator="kind"),
]

VALUE_BEARING = (Quantity, QuantityPair, Qualitative, Frequency)


# Time references

class Anchor(str, Enum):
    """Patient-timeline anchors, in timeline order."""
    PRE_ADMISSION = "pre_admission"
    ADMISSION = "admission"
    DAY_N = "day_n"
    DISCHARGE = "discharge"
    POST_DISCHARGE = "post_discharge"


class UnknownTime(FrozenModel):
    kind: Literal["unknown"] = "unknown"


class Marker(FrozenModel):
    """A named anchor; ``day`` is only set for ``day_n``."""
    kind: Literal["marker"] = "marker"
    anchor: Anchor
    day: Optional[int] = None

    @classmethod
    def at(cls, anchor: Anchor) -> "Marker":
        return cls(anchor=anchor)

    @classmethod
    def day_n(cls, n: int) -> "Marker":
        return cls(anchor=Anchor.DAY_N, day=n)


class Offset(FrozenModel):
    """Days after admission (admission day is 0)."""
    kind: Literal["offset"] = "offset"
    days: Rational


TimePoint = Annotated[Union[Marker, Offset], Field(discriminator="kind")]


class Interval(FrozenModel):
    """Span between two anchor points; the start is always inclusive."""
    kind: Literal["interval"] = "interval"
    start: TimePoint
    end: TimePoint
    end_inclusive: bool = True


TimeRef = Annotated[
    Union[UnknownTime, Marker, Offset, Interval],
    Field(discriminator="kind"),
]

UNKNOWN_TIME = UnknownTime()


class Proposition(FrozenModel):
    """
    One atomic claim.

    Attributes:
        id: (doc_id, index) unique within the document
        entity: canonical concept id
        attribute: attribute kind and source cue
        value: tagged value variant
        time: tagged time reference
        negated: True when the claim asserts absence
        source_span: (sentence_index, char_start, char_end); structured
            entries use (entry_index, 0, 0)
    """
    id: PropositionId
    entity: ConceptId
    attribute: Attribute
    value: Value = Field(default_factory=Present)
    time: TimeRef = Field(default_factory=UnknownTime)
    negated: bool = False
    source_span: Tuple[int, int, int] = (0, 0, 0)


class DocContext(FrozenModel):
    """Admission and discharge dates of one document, when known."""
    admission: Optional[date] = None
    discharge: Optional[date] = None

    @property
    def discharge_offset(self) -> Optional[Fraction]:
        if self.admission is None or self.discharge is None:
            return None
        return Fraction((self.discharge - self.admission).days)

    def offset_of(self, day: date) -> Optional[Fraction]:
        """Days from admission to ``day``; None without an admission date."""
        if self.admission is None:
            return None
        return Fraction((day - self.admission).days)


class PropositionSet(FrozenModel):
    """The ordered propositions of one document."""
    doc_id: str
    kind: DocumentKind
    items: Tuple[Proposition, ...] = ()
    context: DocContext = Field(default_factory=DocContext)

    def __len__(self) -> int:
        return len(self.items)

    def get(self, proposition_id: PropositionId) -> Proposition:
        doc_id, index = proposition_id
        if doc_id != self.doc_id:
            raise KeyError(proposition_id)
        return self.items[index]


def proposition_key(p: Proposition) -> Tuple[ConceptId, AttributeKind]:
    """The (entity, attribute kind) pair used by the negation and presence checks."""
    return (p.entity, p.attribute.kind)


def is_value_bearing(p: Proposition) -> bool:
    return isinstance(p.value, VALUE_BEARING)
