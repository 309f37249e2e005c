"""
Document to PropositionSet extraction.

Structured entries map one-to-one to propositions and come first. Free text
runs segment -> time and value scan -> lexicon entity scan -> value
attachment -> attribute inference -> negation, and every distinct
(entity, attribute, value, time, negation) combination in a sentence becomes
one proposition.
"""
import logging
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

from pydantic import ValidationError

from app.extraction.entities import EntityMention, scan_entities, tokenize
from app.extraction.negation import detect_negation
from app.extraction.segmenter import Sentence, segment_sentences
from app.extraction.temporal import find_time_mentions, normalize_time
from app.extraction.values import (
    ValueMention,
    attach_values,
    find_value_mentions,
    parse_value_text,
)
from app.kb.knowledge_base import CATEGORY_ATTRIBUTES, KnowledgeBase, surface_key
from app.models.base import FrozenModel
from app.models.codec import decode_time, decode_value
from app.models.document import Document, StructuredEntry
from app.models.proposition import (
    UNKNOWN_TIME,
    Anchor,
    Attribute,
    AttributeKind,
    DocContext,
    Frequency,
    Marker,
    Present,
    Proposition,
    PropositionSet,
    Qualitative,
    Quantity,
    QuantityPair,
    TimeRef,
    Value,
)
from app.models.rational import to_fraction
from app.services.errors import DataError, EmptyDocument
from backend.config import ExtractionSettings

logger = logging.getLogger(__name__)

# Attribute kinds a cue may assign to an entity of each top-level class.
COMPATIBLE_KINDS: Dict[str, Set[AttributeKind]] = {
    "diagnoses": {AttributeKind.DIAGNOSIS},
    "medications": {
        AttributeKind.TREATMENT,
        AttributeKind.MEDICATION,
        AttributeKind.DOSAGE,
    },
    "lab_tests": {AttributeKind.LAB_VALUE},
    "procedures": {AttributeKind.PROCEDURE, AttributeKind.TREATMENT},
    "clinical_states": {AttributeKind.STATUS, AttributeKind.TREATMENT},
    "events": {AttributeKind.EVENT},
}

PRECEDING_CUE_WINDOW = 6
FOLLOWING_CUE_WINDOW = 4


class CueHit(FrozenModel):
    """An attribute cue phrase found at token range ``[first, last)``."""
    kind: AttributeKind
    phrase: str
    first: int
    last: int


class PropositionExtractor:
    """
    Deterministic rule-based extractor bound to one knowledge base.

    Example:
        extractor = PropositionExtractor(kb)
        propositions = extractor.extract(document)
    """

    def __init__(
        self, kb: KnowledgeBase, settings: Optional[ExtractionSettings] = None
    ):
        self.kb = kb
        self.settings = settings or ExtractionSettings()
        self._attribute_cues: List[Tuple[AttributeKind, Tuple[str, ...], str]] = []
        for kind in AttributeKind:
            for phrase in kb.cue_phrases(kind.value):
                tokens = tuple(surface_key(phrase).split())
                if tokens:
                    self._attribute_cues.append((kind, tokens, phrase))

    def extract(self, doc: Document) -> PropositionSet:
        """
        Extract the proposition set of one document.

        Raises:
            EmptyDocument: the document has neither text nor structured entries
            DataError: a structured entry cannot be interpreted
        """
        if doc.is_empty():
            raise EmptyDocument(
                f"document '{doc.doc_id}' has neither text nor structured entries"
            )

        context = doc.context
        drafts: List[Dict[str, Any]] = []
        for index, entry in enumerate(doc.structured or []):
            drafts.append(self._from_entry(doc.doc_id, index, entry, context))
        if doc.text:
            abbreviations = self.kb.cue_phrases("abbreviation")
            for sentence in segment_sentences(doc.text, abbreviations):
                drafts.extend(self._from_sentence(sentence, context))

        items = tuple(
            Proposition(id=(doc.doc_id, index), **draft)
            for index, draft in enumerate(drafts)
        )
        logger.debug(
            "Extracted propositions",
            extra={
                "doc_id": doc.doc_id,
                "kind": doc.kind.value,
                "propositions": len(items),
            },
        )
        return PropositionSet(
            doc_id=doc.doc_id, kind=doc.kind, items=items, context=context
        )

    # Structured entries

    def _from_entry(
        self, doc_id: str, index: int, entry: StructuredEntry, context: DocContext
    ) -> Dict[str, Any]:
        try:
            value = self._entry_value(entry)
            time = self._entry_time(entry.time, context)
        except (ValidationError, ValueError) as e:
            raise DataError(
                f"document '{doc_id}', structured entry {index}: {e}",
                original_exception=e,
            ) from e
        return {
            "entity": self.kb.normalize_concept(entry.entity),
            "attribute": Attribute(kind=entry.attribute),
            "value": value,
            "time": time,
            "negated": entry.negated,
            "source_span": (index, 0, 0),
        }

    def _unit(self, unit: str) -> str:
        return self.kb.units.resolve(unit) or unit

    def _entry_value(self, entry: StructuredEntry) -> Value:
        raw = entry.value
        if raw is None:
            return Present()
        if isinstance(raw, bool):
            return Present(flag=raw)
        if isinstance(raw, dict):
            value = decode_value(raw)
            if isinstance(value, (Quantity, QuantityPair)):
                return value.model_copy(update={"unit": self._unit(value.unit)})
            return value
        if isinstance(raw, (int, float)):
            if not entry.unit:
                raise ValueError(f"numeric value {raw!r} needs a unit")
            return Quantity(magnitude=to_fraction(raw), unit=self._unit(entry.unit))
        if isinstance(raw, str):
            text = raw.strip()
            if not text:
                return Present()
            parsed = parse_value_text(
                text, self.kb, entry.unit, self.settings.default_pair_unit
            )
            if parsed is not None:
                return parsed
            if entry.unit:
                magnitude = to_fraction(text)
                return Quantity(magnitude=magnitude, unit=self._unit(entry.unit))
            return Qualitative(label=" ".join(text.lower().split()))
        raise ValueError(f"unsupported value {raw!r}")

    def _entry_time(self, raw: Any, context: DocContext) -> TimeRef:
        if raw is None:
            return UNKNOWN_TIME
        if isinstance(raw, dict):
            return decode_time(raw)
        if isinstance(raw, str):
            text = raw.strip()
            anchors = {anchor.value for anchor in Anchor if anchor is not Anchor.DAY_N}
            if text.lower() in anchors:
                return Marker.at(Anchor(text.lower()))
            return normalize_time(text, context)
        raise ValueError(f"unsupported time {raw!r}")

    # Free text

    def _from_sentence(
        self, sentence: Sentence, context: DocContext
    ) -> List[Dict[str, Any]]:
        text = sentence.text
        time = normalize_time(text, context)
        time_spans = [(m.start, m.end) for m in find_time_mentions(text, context)]
        values = find_value_mentions(
            text, self.kb, time_spans, self.settings.default_pair_unit
        )
        value_spans = [(m.start, m.end) for m in values]
        entities = scan_entities(text, self.kb, time_spans + value_spans)
        attached = attach_values(text, entities, values)
        cue_hits = self._cue_hits(text)

        drafts: List[Dict[str, Any]] = []
        seen: Set[Tuple[Any, ...]] = set()
        for entity, bucket in zip(entities, attached):
            negated = detect_negation(
                text,
                entity.span,
                self.kb.cues,
                window=self.settings.negation_window,
                post_window=self.settings.post_negation_window,
            )
            mentions: Sequence[Optional[ValueMention]] = bucket or [None]
            for mention in mentions:
                value = mention.value if mention is not None else Present()
                attribute = self._infer_attribute(entity, value, cue_hits)
                key = (entity.concept, attribute.kind, value, time, negated)
                if key in seen:
                    continue
                seen.add(key)
                start, end = entity.start, entity.end
                if mention is not None:
                    start, end = min(start, mention.start), max(end, mention.end)
                drafts.append(
                    {
                        "entity": entity.concept,
                        "attribute": attribute,
                        "value": value,
                        "time": time,
                        "negated": negated,
                        "source_span": (
                            sentence.index,
                            sentence.start + start,
                            sentence.start + end,
                        ),
                    }
                )
        return drafts

    def _cue_hits(self, text: str) -> List[CueHit]:
        words = [t.text for t in tokenize(text)]
        hits: List[CueHit] = []
        for kind, phrase_tokens, phrase in self._attribute_cues:
            size = len(phrase_tokens)
            for i in range(len(words) - size + 1):
                if tuple(words[i : i + size]) == phrase_tokens:
                    hits.append(
                        CueHit(kind=kind, phrase=phrase, first=i, last=i + size)
                    )
        return hits

    def _infer_attribute(
        self, entity: EntityMention, value: Value, cue_hits: Sequence[CueHit]
    ) -> Attribute:
        category = self.kb.category_of(entity.concept)
        if category:
            allowed = COMPATIBLE_KINDS.get(category, set(AttributeKind))
        else:
            allowed = set(AttributeKind)
        candidates = [hit for hit in cue_hits if hit.kind in allowed]
        cue = self._nearest_cue(entity, candidates)
        if cue is not None:
            fallback_cue = cue.phrase
        else:
            fallback_cue = f"category:{category or 'none'}"

        if category == "lab_tests" and isinstance(value, (Quantity, QuantityPair)):
            return Attribute(kind=AttributeKind.LAB_VALUE, raw_cue=fallback_cue)
        if category == "medications" and isinstance(value, (Quantity, Frequency)):
            return Attribute(kind=AttributeKind.DOSAGE, raw_cue=fallback_cue)
        if cue is not None:
            return Attribute(kind=cue.kind, raw_cue=cue.phrase)
        if category:
            kind = CATEGORY_ATTRIBUTES.get(category, AttributeKind.STATUS)
        else:
            kind = AttributeKind.STATUS
        return Attribute(kind=kind, raw_cue=fallback_cue)

    @staticmethod
    def _nearest_cue(
        entity: EntityMention, hits: Sequence[CueHit]
    ) -> Optional[CueHit]:
        preceding = [
            hit
            for hit in hits
            if hit.last <= entity.first_token
            and entity.first_token - hit.last <= PRECEDING_CUE_WINDOW
        ]
        if preceding:
            return max(preceding, key=lambda hit: (hit.last, hit.last - hit.first))
        following = [
            hit
            for hit in hits
            if hit.first >= entity.last_token
            and hit.first - entity.last_token <= FOLLOWING_CUE_WINDOW
        ]
        if following:
            return min(
                following, key=lambda hit: (hit.first, -(hit.last - hit.first))
            )
        return None


def extract_propositions(
    doc: Document,
    kb: KnowledgeBase,
    settings: Optional[ExtractionSettings] = None,
) -> PropositionSet:
    """Shorthand for ``PropositionExtractor(kb, settings).extract(doc)``."""
    return PropositionExtractor(kb, settings).extract(doc)
