"""
Verdict, omission and report records produced by the checks.
"""
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import Field

from app.models.base import FrozenModel
from app.models.proposition import AttributeKind, ConceptId, PropositionId


class Label(str, Enum):
    SUPPORTED = "Supported"
    NOT_SUPPORTED = "NotSupported"


class FailureCode(str, Enum):
    """Failure codes in report order."""
    NEGATION_FAIL = "NEGATION_FAIL"
    IMPLICATION_FAIL = "IMPLICATION_FAIL"
    TEMPORAL_FAIL = "TEMPORAL_FAIL"
    EXCLUSIVITY_FAIL = "EXCLUSIVITY_FAIL"
    NUMERICAL_FAIL = "NUMERICAL_FAIL"
    NO_EVIDENCE = "NO_EVIDENCE"
    PRESENCE_FAIL = "PRESENCE_FAIL"


_CODE_ORDER = {code: position for position, code in enumerate(FailureCode)}


def ordered_codes(codes: Any) -> Tuple[FailureCode, ...]:
    """Deduplicate and sort failure codes into report order."""
    return tuple(sorted(set(codes), key=_CODE_ORDER.__getitem__))


class Severity(str, Enum):
    FAIL = "fail"
    WARNING = "warning"


class MatchResult(FrozenModel):
    summary_id: PropositionId
    ehr_id: Optional[PropositionId] = None
    score: float = 0.0
    matched: bool = False


class CheckFailure(FrozenModel):
    """One finding of a check, attached to one or more summary propositions."""
    code: FailureCode
    proposition_ids: Tuple[PropositionId, ...]
    detail: str = ""
    severity: Severity = Severity.FAIL

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "code": self.code.value,
            "ids": [list(pid) for pid in self.proposition_ids],
            "detail": self.detail,
            "severity": self.severity.value,
        }


class Verdict(FrozenModel):
    proposition_id: PropositionId
    label: Label
    failure_codes: Tuple[FailureCode, ...] = ()
    matched_ehr_id: Optional[PropositionId] = None
    similarity: float = 0.0
    confidence: float = 0.5

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "id": list(self.proposition_id),
            "label": self.label.value,
            "failure_codes": [code.value for code in self.failure_codes],
            "matched_ehr_id": (
                list(self.matched_ehr_id) if self.matched_ehr_id else None
            ),
            "similarity": round(self.similarity, 6),
            "confidence": round(self.confidence, 6),
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "Verdict":
        matched = data.get("matched_ehr_id")
        return cls(
            proposition_id=tuple(data["id"]),
            label=Label(data["label"]),
            failure_codes=ordered_codes(
                FailureCode(code) for code in data.get("failure_codes", [])
            ),
            matched_ehr_id=tuple(matched) if matched else None,
            similarity=data.get("similarity", 0.0),
            confidence=data.get("confidence", 0.5),
        )


class Omission(FrozenModel):
    """A key EHR fact with no summary counterpart."""
    ehr_id: PropositionId
    entity: ConceptId
    attribute: AttributeKind
    code: FailureCode = FailureCode.PRESENCE_FAIL

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "ehr_id": list(self.ehr_id),
            "entity": self.entity,
            "attribute": self.attribute.value,
            "code": self.code.value,
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "Omission":
        return cls(
            ehr_id=tuple(data["ehr_id"]),
            entity=data["entity"],
            attribute=AttributeKind(data["attribute"]),
            code=FailureCode(data.get("code", FailureCode.PRESENCE_FAIL.value)),
        )


class VerdictReport(FrozenModel):
    """Everything the verifier says about one summary/EHR pair."""
    doc_id: str
    verdicts: Tuple[Verdict, ...] = ()
    omissions: Tuple[Omission, ...] = ()
    params: Dict[str, Any] = Field(default_factory=dict)
    warnings: Tuple[CheckFailure, ...] = ()

    @property
    def not_supported(self) -> List[Verdict]:
        return [v for v in self.verdicts if v.label is Label.NOT_SUPPORTED]

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "verdicts": [v.to_json_dict() for v in self.verdicts],
            "omissions": [o.to_json_dict() for o in self.omissions],
            "params": dict(self.params),
            "warnings": [w.to_json_dict() for w in self.warnings],
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "VerdictReport":
        return cls(
            doc_id=data["doc_id"],
            verdicts=tuple(Verdict.from_json_dict(v) for v in data.get("verdicts", [])),
            omissions=tuple(
                Omission.from_json_dict(o) for o in data.get("omissions", [])
            ),
            params=data.get("params", {}),
        )


class GoldLabel(FrozenModel):
    id: PropositionId
    gold: Label
