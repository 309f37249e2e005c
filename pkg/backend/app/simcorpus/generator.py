"""
Synthetic patient generator.

Each patient is a structured EHR plus a faithful summary: a paraphrased
subset of the record that keeps every key fact. Generation is a pure function
of the seed and the knowledge base.

Record rules:
    - every (concept, attribute kind) appears at most once per record
    - diagnoses sit at admission; everything else on a hospital day
    - implication consequents are added for every antecedent sampled
    - no two concepts of a mutually exclusive pair are sampled together
"""
import logging
import math
import random
from datetime import date, timedelta
from fractions import Fraction
from typing import Any, Iterable, List, Optional, Set, Tuple, Union

from app.checks.document_checks import DEFAULT_KEY_ATTRIBUTES
from app.kb.knowledge_base import CATEGORY_ATTRIBUTES, KnowledgeBase, ReferenceRange
from app.models.base import FrozenModel
from app.models.codec import decode_time, decode_value, encode_time, encode_value
from app.models.document import Document, StructuredEntry
from app.models.proposition import (
    Anchor,
    AttributeKind,
    ConceptId,
    DocumentKind,
    Frequency,
    Marker,
    Present,
    Quantity,
    QuantityPair,
    TimeRef,
    Value,
)
from app.services.errors import DataError, KBTooSmall

logger = logging.getLogger(__name__)

SizeParams = Tuple[int, int]
Seed = Union[int, str]

DEFAULT_SIZE: SizeParams = (10, 40)
DEFAULT_KEEP_RATE = 0.7
EPOCH = date(2020, 1, 1)
STAY_DAYS = (6, 20)
PARAPHRASE_RATE = 0.3
DOSAGE_RATE = 0.6
SCHEDULE_RATE = 0.4

SCHEDULES = (
    (Fraction(1), "day"),
    (Fraction(2), "day"),
    (Fraction(3), "day"),
    (Fraction(1, 8), "h"),
    (Fraction(1, 12), "h"),
)

# Vocabulary pools the filler samples from, in draw order.
POOLS = ("lab_tests", "medications", "procedures", "clinical_states", "diagnoses")


class Fact(FrozenModel):
    """One generated proposition before it is written as a structured entry."""
    entity: ConceptId
    kind: AttributeKind
    value: Value
    time: TimeRef
    negated: bool = False
    surface: str = ""

    @property
    def key(self) -> Tuple[ConceptId, AttributeKind]:
        return (self.entity, self.kind)

    def to_entry(self) -> StructuredEntry:
        return StructuredEntry(
            entity=self.surface or spaced(self.entity),
            attribute=self.kind,
            value=encode_value(self.value),
            time=encode_time(self.time),
            negated=self.negated,
        )

    @classmethod
    def from_entry(cls, entry: StructuredEntry, kb: KnowledgeBase) -> "Fact":
        """
        Read back an entry written by :meth:`to_entry`.

        Raises:
            DataError: the entry does not carry tagged value and time objects
        """
        if not isinstance(entry.value, dict) or not isinstance(entry.time, dict):
            raise DataError(
                f"entry '{entry.entity}' was not produced by the corpus generator"
            )
        return cls(
            entity=kb.normalize_concept(entry.entity),
            kind=entry.attribute,
            value=decode_value(entry.value),
            time=decode_time(entry.time),
            negated=entry.negated,
            surface=entry.entity,
        )


def spaced(concept: ConceptId) -> str:
    return concept.replace("_", " ")


def ehr_doc_id(index: int) -> str:
    return f"p{index:04d}.ehr"


def summary_doc_id(index: int) -> str:
    return f"p{index:04d}.summary"


def attribute_for(concept: ConceptId, kb: KnowledgeBase) -> AttributeKind:
    """Attribute kind a bare mention of ``concept`` takes."""
    category = kb.category_of(concept)
    if not category:
        return AttributeKind.STATUS
    return CATEGORY_ATTRIBUTES.get(category, AttributeKind.STATUS)


def sample_magnitude(low: Fraction, high: Fraction, rng: random.Random) -> Fraction:
    """A value in ``[low, high]`` on a grid one decade finer than the range width."""
    width = high - low
    if width <= 0:
        return low
    step = Fraction(10) ** (math.floor(math.log10(width)) - 1)
    return low + step * rng.randint(0, math.floor(width / step))


def sample_value(reference: ReferenceRange, rng: random.Random) -> Value:
    first = sample_magnitude(reference.low, reference.high, rng)
    if reference.is_pair:
        second = sample_magnitude(reference.low_second, reference.high_second, rng)
        return QuantityPair(first=first, second=second, unit=reference.unit)
    return Quantity(magnitude=first, unit=reference.unit)


def document_from_facts(
    doc_id: str,
    kind: DocumentKind,
    facts: Iterable[Fact],
    admission: date,
    discharge: date,
) -> Document:
    return Document(
        doc_id=doc_id,
        kind=kind,
        structured=[fact.to_entry() for fact in facts],
        admission=admission,
        discharge=discharge,
    )


def facts_of(document: Document, kb: KnowledgeBase) -> List[Fact]:
    return [Fact.from_entry(entry, kb) for entry in document.structured or []]


class PatientGenerator:
    """
    Samples patients from the vocabularies of one knowledge base.

    Example:
        generator = PatientGenerator(kb)
        ehr, summary = generator.generate(seed="7:0", index=0)
    """

    def __init__(
        self,
        kb: KnowledgeBase,
        size_params: SizeParams = DEFAULT_SIZE,
        keep_rate: float = DEFAULT_KEEP_RATE,
        key_attributes: Iterable[AttributeKind] = DEFAULT_KEY_ATTRIBUTES,
    ):
        low, high = size_params
        if low < 1 or low > high:
            raise ValueError(f"invalid size bounds {size_params}")
        self.kb = kb
        self.size_params = (low, high)
        self.keep_rate = keep_rate
        self.key_attributes = frozenset(key_attributes)
        self.pools = {
            "diagnoses": kb.classes.leaves_of("diagnoses"),
            "medications": kb.classes.leaves_of("medications"),
            "lab_tests": [
                c for c in kb.classes.leaves_of("lab_tests") if c in kb.ranges
            ],
            "procedures": kb.classes.leaves_of("procedures"),
            "clinical_states": kb.classes.leaves_of("clinical_states"),
        }
        missing = [
            name
            for name in ("diagnoses", "medications", "lab_tests")
            if not self.pools[name]
        ]
        if missing:
            raise KBTooSmall(f"knowledge base has no usable {', '.join(missing)}")

    def generate(self, seed: Seed, index: int = 0) -> Tuple[Document, Document]:
        """
        Generate one (EHR, faithful summary) pair.

        Raises:
            KBTooSmall: the vocabulary cannot fill the lower size bound
        """
        rng = random.Random(str(seed))
        target = rng.randint(*self.size_params)
        stay = rng.randint(*STAY_DAYS)
        admission = EPOCH + timedelta(days=rng.randrange(0, 4 * 365))
        discharge = admission + timedelta(days=stay)

        facts = self._record(rng, target, stay)
        if len(facts) < self.size_params[0]:
            raise KBTooSmall(
                f"only {len(facts)} propositions could be sampled, "
                f"need {self.size_params[0]}"
            )
        facts.sort(key=lambda f: self._day_of(f, stay))
        summary = [self._paraphrase(f, rng) for f in facts if self._keeps(f, rng)]

        ehr_doc = document_from_facts(
            ehr_doc_id(index), DocumentKind.EHR, facts, admission, discharge
        )
        summary_doc = document_from_facts(
            summary_doc_id(index), DocumentKind.SUMMARY, summary, admission, discharge
        )
        logger.debug(
            "Generated patient",
            extra={
                "seed": str(seed),
                "ehr_propositions": len(facts),
                "summary_propositions": len(summary),
            },
        )
        return ehr_doc, summary_doc

    # Record sampling

    def _record(self, rng: random.Random, target: int, stay: int) -> List[Fact]:
        facts: List[Fact] = []
        present: Set[ConceptId] = set()
        if "discharge" in self.kb.concepts:
            facts.append(
                Fact(
                    entity="discharge",
                    kind=AttributeKind.EVENT,
                    value=Present(),
                    time=Marker.at(Anchor.DISCHARGE),
                )
            )
            present.add("discharge")

        diagnoses = self.pools["diagnoses"]
        for concept in rng.sample(diagnoses, min(rng.randint(1, 3), len(diagnoses))):
            self._admit(concept, facts, present, rng, target, stay)

        misses = 0
        while len(facts) < target and misses < 200:
            pool = self.pools[rng.choice([name for name in POOLS if self.pools[name]])]
            if not self._admit(rng.choice(pool), facts, present, rng, target, stay):
                misses += 1
        return facts

    def _admit(
        self,
        concept: ConceptId,
        facts: List[Fact],
        present: Set[ConceptId],
        rng: random.Random,
        target: int,
        stay: int,
    ) -> bool:
        """
        Add ``concept`` with its implied consequents when they fit and
        conflict with nothing.
        """
        if concept in present:
            return False
        plan = self._with_consequents(concept, present, rng)
        if plan is None or len(facts) + len(plan) > target:
            return False
        for concept_id in plan:
            kind = attribute_for(concept_id, self.kb)
            if kind is AttributeKind.DIAGNOSIS:
                day = Marker.at(Anchor.ADMISSION)
            else:
                day = Marker.day_n(rng.randint(1, stay - 1))
            facts.append(self._primary_fact(concept_id, kind, day, rng))
            present.add(concept_id)
            if kind is AttributeKind.TREATMENT:
                self._medication_details(concept_id, day, facts, rng, target)
        return True

    def _with_consequents(
        self, concept: ConceptId, present: Set[ConceptId], rng: random.Random
    ) -> Optional[List[ConceptId]]:
        plan: List[ConceptId] = [concept]
        pending = [concept]
        while pending:
            current = pending.pop(0)
            for rule in self.kb.implications:
                if not self.kb.is_member(current, rule.antecedent):
                    continue
                chosen = present | set(plan)
                if any(self.kb.is_member(c, rule.consequent) for c in chosen):
                    continue
                options = self.kb.classes.leaves_of(rule.consequent) or [
                    rule.consequent
                ]
                options = [o for o in options if not self._conflicts(o, chosen)]
                if not options:
                    return None
                pick = rng.choice(options)
                plan.append(pick)
                pending.append(pick)
        chosen = set(present)
        for concept_id in plan:
            if self._conflicts(concept_id, chosen):
                return None
            chosen.add(concept_id)
        return plan

    def _conflicts(self, concept: ConceptId, chosen: Iterable[ConceptId]) -> bool:
        return any(self.kb.exclusive_resolved(concept, other) for other in chosen)

    def _primary_fact(
        self, concept: ConceptId, kind: AttributeKind, time: TimeRef, rng: random.Random
    ) -> Fact:
        if kind is AttributeKind.LAB_VALUE:
            value = sample_value(self.kb.ranges[concept], rng)
            return Fact(entity=concept, kind=kind, value=value, time=time)
        return Fact(entity=concept, kind=kind, value=Present(), time=time)

    def _medication_details(
        self,
        concept: ConceptId,
        time: TimeRef,
        facts: List[Fact],
        rng: random.Random,
        target: int,
    ) -> None:
        reference = self.kb.ranges.get(concept)
        if (
            reference is not None
            and not reference.is_pair
            and len(facts) < target
            and rng.random() < DOSAGE_RATE
        ):
            facts.append(
                Fact(
                    entity=concept,
                    kind=AttributeKind.DOSAGE,
                    value=sample_value(reference, rng),
                    time=time,
                )
            )
        if len(facts) < target and rng.random() < SCHEDULE_RATE:
            count, per = rng.choice(SCHEDULES)
            if per in self.kb.units:
                facts.append(
                    Fact(
                        entity=concept,
                        kind=AttributeKind.MEDICATION,
                        value=Frequency(count=count, per=per),
                        time=time,
                    )
                )

    @staticmethod
    def _day_of(fact: Fact, stay: int) -> int:
        time = fact.time
        if isinstance(time, Marker):
            if time.anchor is Anchor.DAY_N:
                return time.day or 0
            if time.anchor is Anchor.DISCHARGE:
                return stay
        return 0

    # Summary paraphrase

    def _keeps(self, fact: Fact, rng: random.Random) -> bool:
        draw = rng.random()
        return fact.kind in self.key_attributes or draw < self.keep_rate

    def _paraphrase(self, fact: Fact, rng: random.Random) -> Fact:
        surfaces = sorted(
            set(self.kb.lexicon.surfaces_of(fact.entity)) | {spaced(fact.entity)}
        )
        return fact.model_copy(
            update={
                "surface": rng.choice(surfaces),
                "value": self._paraphrase_value(fact.value, rng),
            }
        )

    def _paraphrase_value(self, value: Any, rng: random.Random) -> Any:
        draw = rng.random()
        if draw >= PARAPHRASE_RATE:
            return value
        if isinstance(value, Quantity):
            options = self._unit_rewrites(value)
            return rng.choice(options) if options else value
        if (
            isinstance(value, Frequency)
            and "day" in self.kb.units
            and value.per != "day"
        ):
            return Frequency(count=self.kb.frequency_rate(value), per="day")
        return value

    def _unit_rewrites(self, quantity: Quantity) -> List[Quantity]:
        dimension = self.kb.units.dimension(quantity.unit)
        if dimension is None:
            return []
        rewrites = []
        for unit in self.kb.units.units_in(dimension):
            if unit == quantity.unit:
                continue
            converted = self.kb.convert_unit(quantity, unit)
            magnitude = converted.magnitude
            if 10 ** 4 % magnitude.denominator == 0 and 0 < magnitude < 10 ** 6:
                rewrites.append(converted)
        return rewrites


def generate_patient(
    seed: Seed,
    kb: KnowledgeBase,
    size_params: SizeParams = DEFAULT_SIZE,
    keep_rate: float = DEFAULT_KEEP_RATE,
    index: int = 0,
) -> Tuple[Document, Document]:
    """
    Generate one (EHR, faithful summary) pair.

    Raises:
        KBTooSmall: the knowledge base cannot supply a record of the requested size
    """
    return PatientGenerator(kb, size_params, keep_rate).generate(seed, index)
