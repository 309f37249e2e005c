"""
JSON encoding for propositions and proposition sets.

Keys are emitted in a fixed order so reports are byte-stable:
``id, entity, attribute, value, time, negated, span, cue``.
"""
import json
from typing import Any, Dict, List

from pydantic import TypeAdapter

from app.models.proposition import (
    Attribute,
    DocContext,
    DocumentKind,
    Proposition,
    PropositionSet,
    TimeRef,
    Value,
)

VALUE_ADAPTER: TypeAdapter = TypeAdapter(Value)
TIME_ADAPTER: TypeAdapter = TypeAdapter(TimeRef)


def encode_value(value: Any) -> Dict[str, Any]:
    return value.model_dump(mode="json")


def decode_value(data: Dict[str, Any]) -> Any:
    return VALUE_ADAPTER.validate_python(data)


def encode_time(time: Any) -> Dict[str, Any]:
    return time.model_dump(mode="json")


def decode_time(data: Dict[str, Any]) -> Any:
    return TIME_ADAPTER.validate_python(data)


def encode_proposition(p: Proposition) -> Dict[str, Any]:
    return {
        "id": [p.id[0], p.id[1]],
        "entity": p.entity,
        "attribute": p.attribute.kind.value,
        "value": encode_value(p.value),
        "time": encode_time(p.time),
        "negated": p.negated,
        "span": list(p.source_span),
        "cue": p.attribute.raw_cue,
    }


def decode_proposition(data: Dict[str, Any]) -> Proposition:
    return Proposition(
        id=tuple(data["id"]),
        entity=data["entity"],
        attribute=Attribute(kind=data["attribute"], raw_cue=data.get("cue", "")),
        value=decode_value(data["value"]),
        time=decode_time(data.get("time", {"kind": "unknown"})),
        negated=data.get("negated", False),
        source_span=tuple(data.get("span", (0, 0, 0))),
    )


def encode_proposition_set(propositions: PropositionSet) -> Dict[str, Any]:
    context = propositions.context
    return {
        "doc_id": propositions.doc_id,
        "kind": propositions.kind.value,
        "admission": context.admission.isoformat() if context.admission else None,
        "discharge": context.discharge.isoformat() if context.discharge else None,
        "propositions": [encode_proposition(p) for p in propositions.items],
    }


def decode_proposition_set(data: Dict[str, Any]) -> PropositionSet:
    items: List[Proposition] = [
        decode_proposition(item) for item in data.get("propositions", [])
    ]
    return PropositionSet(
        doc_id=data["doc_id"],
        kind=DocumentKind(data["kind"]),
        items=tuple(items),
        context=DocContext(
            admission=data.get("admission"), discharge=data.get("discharge")
        ),
    )


def dumps(payload: Any) -> str:
    """Canonical JSON text used for every file veriprop writes."""
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
