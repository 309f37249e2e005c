"""
Controlled hallucination injection into faithful summaries.

Each fault kind corrupts the summary in a way exactly one check should
notice. Faults never share a proposition and never disturb propositions
outside their own site; inserted propositions are checked to stay unmatched
by the aligner.
"""
import logging
import math
import random
from enum import Enum
from fractions import Fraction
from itertools import count
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from pydantic import Field, ValidationError, model_validator

from app.alignment.base_embedder import Embedder
from app.alignment.matcher import cosine
from app.alignment.providers.hashed_embedder import HashedConceptEmbedder
from app.checks.document_checks import DEFAULT_KEY_ATTRIBUTES, entities_equivalent
from app.kb.knowledge_base import KnowledgeBase
from app.models.base import FrozenModel
from app.models.document import Document
from app.models.proposition import (
    Anchor,
    Attribute,
    AttributeKind,
    ConceptId,
    DocumentKind,
    Frequency,
    Interval,
    Marker,
    Present,
    Proposition,
    PropositionId,
    PropositionSet,
    Quantity,
    QuantityPair,
    UnknownTime,
)
from app.models.rational import Rational
from app.models.timeline import overlaps, resolve_point
from app.models.verdict import FailureCode, GoldLabel, Label, ordered_codes
from app.services.errors import DataError, NoEligibleSite, UsageError
from app.simcorpus.generator import Fact, attribute_for, facts_of, sample_value, spaced

logger = logging.getLogger(__name__)

PERTURB_FACTORS = (Fraction(1, 4), Fraction(1, 2), Fraction(2), Fraction(4))


class FaultKind(str, Enum):
    VALUE_PERTURB = "value_perturb"
    UNIT_SWAP = "unit_swap"
    NEGATION_FLIP = "negation_flip"
    TEMPORAL_SWAP = "temporal_swap"
    EXCLUSIVITY_INSERT = "exclusivity_insert"
    FABRICATION = "fabrication"
    OMISSION = "omission"
    IMPLICATION_BREAK = "implication_break"


EXPECTED_CODES: Dict[FaultKind, FailureCode] = {
    FaultKind.VALUE_PERTURB: FailureCode.NUMERICAL_FAIL,
    FaultKind.UNIT_SWAP: FailureCode.NUMERICAL_FAIL,
    FaultKind.NEGATION_FLIP: FailureCode.NEGATION_FAIL,
    FaultKind.TEMPORAL_SWAP: FailureCode.TEMPORAL_FAIL,
    FaultKind.EXCLUSIVITY_INSERT: FailureCode.EXCLUSIVITY_FAIL,
    FaultKind.FABRICATION: FailureCode.NO_EVIDENCE,
    FaultKind.OMISSION: FailureCode.PRESENCE_FAIL,
    FaultKind.IMPLICATION_BREAK: FailureCode.IMPLICATION_FAIL,
}


class FaultSpec(FrozenModel):
    """One fault kind applied at ``rate`` of a summary's propositions."""
    kind: FaultKind
    rate: Rational = Fraction(0)
    seed: int = 0

    @model_validator(mode="after")
    def _rate_in_unit_interval(self):
        if not 0 <= self.rate <= 1:
            raise ValueError(f"fault rate must lie in [0, 1], got {self.rate}")
        return self

    def site_count(self, size: int) -> int:
        """``max(1, floor(rate * size))`` sites, none when the rate is zero."""
        if self.rate == 0:
            return 0
        return max(1, math.floor(self.rate * size))

    def to_json_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def check_fault_plan(faults: Sequence[FaultSpec]) -> None:
    """
    Raises:
        UsageError: the rates add up to more than one
    """
    total = sum((spec.rate for spec in faults), Fraction(0))
    if total > 1:
        raise UsageError(f"fault rates sum to {float(total):.4f}, which exceeds 1")


def load_fault_specs(data: Any) -> List[FaultSpec]:
    """
    Parse a fault plan: a list of specs or an object with a ``faults`` list.

    Raises:
        DataError: a spec is malformed
        UsageError: the rates add up to more than one
    """
    items = data.get("faults", []) if isinstance(data, dict) else data
    if not isinstance(items, list):
        raise DataError("fault plan must be a list of fault specs")
    specs: List[FaultSpec] = []
    for position, item in enumerate(items):
        try:
            specs.append(FaultSpec.model_validate(item))
        except ValidationError as e:
            raise DataError(
                f"fault spec {position} is invalid: {e}", original_exception=e
            ) from e
    check_fault_plan(specs)
    return specs


class ExpectedFault(FrozenModel):
    """Where one injected fault should surface and with which code."""
    kind: FaultKind
    code: FailureCode
    ids: Tuple[PropositionId, ...] = ()
    omissions: Tuple[PropositionId, ...] = ()

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "code": self.code.value,
            "ids": [list(pid) for pid in self.ids],
            "omissions": [list(pid) for pid in self.omissions],
        }


class GoldRecord(FrozenModel):
    """Gold labels of one summary plus the expected fault sites."""
    doc_id: str
    ehr_id: str
    labels: Tuple[GoldLabel, ...] = ()
    codes: Dict[int, Tuple[FailureCode, ...]] = Field(default_factory=dict)
    expected: Tuple[ExpectedFault, ...] = ()
    omissions: Tuple[PropositionId, ...] = ()

    def codes_of(self, pid: PropositionId) -> Tuple[FailureCode, ...]:
        return self.codes.get(pid[1], ())

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "ehr_id": self.ehr_id,
            "labels": [
                {
                    "id": list(label.id),
                    "gold": label.gold.value,
                    "codes": [code.value for code in self.codes_of(label.id)],
                }
                for label in self.labels
            ],
            "expected": [fault.to_json_dict() for fault in self.expected],
            "omissions": [list(pid) for pid in self.omissions],
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> "GoldRecord":
        labels = tuple(
            GoldLabel(id=tuple(item["id"]), gold=Label(item["gold"]))
            for item in data.get("labels", [])
        )
        codes = {
            item["id"][1]: ordered_codes(
                FailureCode(code) for code in item.get("codes", [])
            )
            for item in data.get("labels", [])
            if item.get("codes")
        }
        expected = tuple(
            ExpectedFault(
                kind=FaultKind(item["kind"]),
                code=FailureCode(item["code"]),
                ids=tuple(tuple(pid) for pid in item.get("ids", [])),
                omissions=tuple(tuple(pid) for pid in item.get("omissions", [])),
            )
            for item in data.get("expected", [])
        )
        return cls(
            doc_id=data["doc_id"],
            ehr_id=data.get("ehr_id", ""),
            labels=labels,
            codes=codes,
            expected=expected,
            omissions=tuple(tuple(pid) for pid in data.get("omissions", [])),
        )


class InjectionResult(FrozenModel):
    ehr: Document
    summary: Document
    gold: GoldRecord
    skipped: Tuple[FaultKind, ...] = ()


class _Site(FrozenModel):
    """A summary proposition under construction; ``key`` survives deletions."""
    key: int
    fact: Fact
    ehr_index: Optional[int] = None
    codes: Tuple[FailureCode, ...] = ()
    used: bool = False

    @property
    def matched(self) -> bool:
        return self.ehr_index is not None


class _Expectation(FrozenModel):
    kind: FaultKind
    site_keys: Tuple[int, ...] = ()
    ehr_indices: Tuple[int, ...] = ()


class FaultInjector:
    """
    Applies fault specs to one faithful (EHR, summary) pair.

    Example:
        injector = FaultInjector(kb, ehr, summary)
        result = injector.inject([FaultSpec(kind="negation_flip", rate=0.1)])
    """

    def __init__(
        self,
        kb: KnowledgeBase,
        ehr: Document,
        summary: Document,
        key_attributes: Iterable[AttributeKind] = DEFAULT_KEY_ATTRIBUTES,
        embedder: Optional[Embedder] = None,
        tau_match: float = 0.5,
    ):
        self.kb = kb
        self.ehr = ehr
        self.summary = summary
        self.context = ehr.context
        self.key_attributes = frozenset(key_attributes)
        self.embedder = embedder or HashedConceptEmbedder({}, kb)
        self.tau_match = tau_match

        self.ehr_facts = facts_of(ehr, kb)
        by_key = {fact.key: i for i, fact in enumerate(self.ehr_facts)}
        self._keys = count()
        self.sites: List[_Site] = [
            _Site(key=next(self._keys), fact=fact, ehr_index=by_key.get(fact.key))
            for fact in facts_of(summary, kb)
        ]
        self.expectations: List[_Expectation] = []
        self.omitted: List[int] = []
        ehr_set = self._as_propositions(self.ehr_facts, ehr.doc_id, DocumentKind.EHR)
        self._ehr_vectors = self.embedder.embed_set(ehr_set)
        self._handlers = {
            FaultKind.VALUE_PERTURB: self._value_perturb,
            FaultKind.UNIT_SWAP: self._unit_swap,
            FaultKind.NEGATION_FLIP: self._negation_flip,
            FaultKind.TEMPORAL_SWAP: self._temporal_swap,
            FaultKind.EXCLUSIVITY_INSERT: self._exclusivity_insert,
            FaultKind.FABRICATION: self._fabrication,
            FaultKind.OMISSION: self._omission,
            FaultKind.IMPLICATION_BREAK: self._implication_break,
        }

    def inject(
        self, faults: Sequence[FaultSpec], strict: bool = True
    ) -> InjectionResult:
        """
        Apply every fault in order and assemble the corrupted summary and gold.

        Raises:
            NoEligibleSite: in strict mode, a fault found no site at all
            UsageError: the rates add up to more than one
        """
        check_fault_plan(faults)
        size = len(self.sites)
        skipped: List[FaultKind] = []
        for spec in faults:
            wanted = spec.site_count(size)
            if wanted == 0:
                continue
            rng = random.Random(f"{spec.seed}:{spec.kind.value}:{self.summary.doc_id}")
            handler = self._handlers[spec.kind]
            placed = 0
            while placed < wanted and handler(rng):
                placed += 1
            if placed == 0:
                if strict:
                    raise NoEligibleSite(spec.kind.value)
                skipped.append(spec.kind)
                logger.info(
                    "Fault skipped",
                    extra={"doc_id": self.summary.doc_id, "fault": spec.kind.value},
                )
        return self._result(tuple(skipped))

    # Shared predicates

    def _free(self) -> List[_Site]:
        return [s for s in self.sites if not s.used and s.matched]

    def _position(self, key: int) -> int:
        for position, site in enumerate(self.sites):
            if site.key == key:
                return position
        raise KeyError(key)

    def _update(self, key: int, **changes: Any) -> None:
        position = self._position(key)
        site = self.sites[position]
        if "codes" in changes:
            changes["codes"] = ordered_codes(site.codes + tuple(changes["codes"]))
        self.sites[position] = site.model_copy(update={"used": True, **changes})

    def _grounded(self, consequent: ConceptId) -> bool:
        return any(
            not f.negated and self.kb.is_member(f.entity, consequent)
            for f in self.ehr_facts
        )

    def _stranded(self, without: FrozenSet[int] = frozenset()) -> Set[int]:
        """
        Rules whose asserted antecedent lacks an asserted consequent once
        ``without`` is gone.
        """
        live = [
            s.fact.entity
            for s in self.sites
            if s.key not in without and not s.fact.negated
        ]
        stranded = set()
        for index, rule in enumerate(self.kb.implications):
            if not any(self.kb.is_member(e, rule.antecedent) for e in live):
                continue
            if any(self.kb.is_member(e, rule.consequent) for e in live):
                continue
            if self._grounded(rule.consequent):
                stranded.add(index)
        return stranded

    def _keeps_implications(self, keys: Iterable[int]) -> bool:
        return self._stranded(frozenset(keys)) <= self._stranded()

    def _rule_members(self, concept: ConceptId) -> bool:
        return any(
            self.kb.is_member(concept, rule.antecedent)
            or self.kb.is_member(concept, rule.consequent)
            for rule in self.kb.implications
        )

    def _is_antecedent(self, concept: ConceptId) -> bool:
        return any(
            self.kb.is_member(concept, rule.antecedent)
            for rule in self.kb.implications
        )

    def _known(self, concept: ConceptId) -> bool:
        entities = [f.entity for f in self.ehr_facts] + [
            s.fact.entity for s in self.sites
        ]
        return any(entities_equivalent(concept, e, self.kb) for e in entities)

    def _stays_unmatched(self, fact: Fact) -> bool:
        if len(self._ehr_vectors) == 0:
            return True
        candidate = self._as_propositions(
            [fact], self.summary.doc_id, DocumentKind.SUMMARY
        )
        (vector,) = self.embedder.embed_set(candidate)
        return all(
            cosine(vector, other) < self.tau_match for other in self._ehr_vectors
        )

    def _as_propositions(
        self, facts: Sequence[Fact], doc_id: str, kind: DocumentKind
    ) -> PropositionSet:
        items = tuple(
            Proposition(
                id=(doc_id, i),
                entity=f.entity,
                attribute=Attribute(kind=f.kind),
                value=f.value,
                time=f.time,
                negated=f.negated,
                source_span=(i, 0, 0),
            )
            for i, f in enumerate(facts)
        )
        return PropositionSet(
            doc_id=doc_id, kind=kind, items=items, context=self.context
        )

    def _insert(self, fact: Fact, codes: Sequence[FailureCode]) -> int:
        key = next(self._keys)
        site = _Site(key=key, fact=fact, codes=ordered_codes(codes), used=True)
        self.sites.append(site)
        return key

    def _expect(
        self,
        kind: FaultKind,
        site_keys: Sequence[int] = (),
        ehr_indices: Sequence[int] = (),
    ) -> None:
        self.expectations.append(
            _Expectation(
                kind=kind, site_keys=tuple(site_keys), ehr_indices=tuple(ehr_indices)
            )
        )

    def _stay_days(self) -> int:
        offset = self.context.discharge_offset
        return int(offset) if offset is not None and offset >= 2 else 2

    # Fault handlers: each places one site and reports whether it could

    def _value_perturb(self, rng: random.Random) -> bool:
        candidates = [
            s
            for s in self._free()
            if isinstance(s.fact.value, (Quantity, QuantityPair, Frequency))
            and self._nonzero(s.fact.value)
        ]
        if not candidates:
            return False
        site = rng.choice(candidates)
        factor = rng.choice(PERTURB_FACTORS)
        value = site.fact.value
        if isinstance(value, Quantity):
            value = value.model_copy(update={"magnitude": value.magnitude * factor})
        elif isinstance(value, QuantityPair):
            value = value.model_copy(
                update={"first": value.first * factor, "second": value.second * factor}
            )
        else:
            value = value.model_copy(update={"count": value.count * factor})
        self._update(
            site.key,
            fact=site.fact.model_copy(update={"value": value}),
            codes=[FailureCode.NUMERICAL_FAIL],
        )
        self._expect(FaultKind.VALUE_PERTURB, [site.key])
        return True

    @staticmethod
    def _nonzero(value: Any) -> bool:
        if isinstance(value, Quantity):
            return value.magnitude != 0
        if isinstance(value, QuantityPair):
            return value.first != 0 or value.second != 0
        return value.count != 0

    def _swap_units(self, quantity: Quantity) -> List[str]:
        dimension = self.kb.units.dimension(quantity.unit)
        if dimension is None:
            return []
        current = self.kb.units.resolve(quantity.unit)
        return [u for u in self.kb.units.units_in(dimension) if u != current]

    def _unit_swap(self, rng: random.Random) -> bool:
        candidates = [
            s
            for s in self._free()
            if isinstance(s.fact.value, Quantity)
            and s.fact.value.magnitude != 0
            and self._swap_units(s.fact.value)
        ]
        if not candidates:
            return False
        site = rng.choice(candidates)
        unit = rng.choice(self._swap_units(site.fact.value))
        value = site.fact.value.model_copy(update={"unit": unit})
        self._update(
            site.key,
            fact=site.fact.model_copy(update={"value": value}),
            codes=[FailureCode.NUMERICAL_FAIL],
        )
        self._expect(FaultKind.UNIT_SWAP, [site.key])
        return True

    def _negation_flip(self, rng: random.Random) -> bool:
        candidates = [
            s
            for s in self._free()
            if s.fact.negated or self._keeps_implications([s.key])
        ]
        if not candidates:
            return False
        site = rng.choice(candidates)
        fact = site.fact.model_copy(update={"negated": not site.fact.negated})
        self._update(site.key, fact=fact, codes=[FailureCode.NEGATION_FAIL])
        self._expect(FaultKind.NEGATION_FLIP, [site.key])
        return True

    def _temporal_swap(self, rng: random.Random) -> bool:
        groups: Dict[Fraction, List[_Site]] = {}
        for site in self.sites:
            if not site.matched:
                continue
            time = site.fact.time
            if isinstance(time, (UnknownTime, Interval)):
                continue
            position = resolve_point(time, self.context)
            if not isinstance(position, Fraction):
                continue
            groups.setdefault(position, []).append(site)
        ordered = sorted(groups)
        candidates = [
            (groups[a][0], groups[b][0])
            for a, b in zip(ordered, ordered[1:])
            if len(groups[a]) == 1
            and len(groups[b]) == 1
            and not groups[a][0].used
            and not groups[b][0].used
        ]
        if not candidates:
            return False
        first, second = rng.choice(candidates)
        self._update(
            first.key,
            fact=first.fact.model_copy(update={"time": second.fact.time}),
            codes=[FailureCode.TEMPORAL_FAIL],
        )
        self._update(
            second.key,
            fact=second.fact.model_copy(update={"time": first.fact.time}),
            codes=[FailureCode.TEMPORAL_FAIL],
        )
        self._expect(FaultKind.TEMPORAL_SWAP, [first.key, second.key])
        return True

    def _exclusivity_insert(self, rng: random.Random) -> bool:
        candidates: List[Tuple[_Site, Fact, List[_Site]]] = []
        for site in self._free():
            if site.fact.negated:
                continue
            for partner in self.kb.exclusive_partners(site.fact.entity):
                for concept in self.kb.classes.leaves_of(partner) or [partner]:
                    if self._is_antecedent(concept) or self._known(concept):
                        continue
                    inserted = Fact(
                        entity=concept,
                        kind=attribute_for(concept, self.kb),
                        value=Present(),
                        time=site.fact.time,
                        surface=spaced(concept),
                    )
                    clashing = [
                        other
                        for other in self.sites
                        if not other.fact.negated
                        and self.kb.exclusive_resolved(concept, other.fact.entity)
                        and self._overlap(inserted, other.fact)
                    ]
                    if any(other.used for other in clashing):
                        continue
                    if not self._stays_unmatched(inserted):
                        continue
                    candidates.append((site, inserted, clashing))
        if not candidates:
            return False
        _, inserted, clashing = rng.choice(candidates)
        key = self._insert(
            inserted, [FailureCode.EXCLUSIVITY_FAIL, FailureCode.NO_EVIDENCE]
        )
        for other in clashing:
            self._update(other.key, codes=[FailureCode.EXCLUSIVITY_FAIL])
        self._expect(
            FaultKind.EXCLUSIVITY_INSERT, [key] + [other.key for other in clashing]
        )
        return True

    def _overlap(self, first: Fact, second: Fact) -> bool:
        return overlaps(first.time, second.time, self.context)

    def _fabrication(self, rng: random.Random) -> bool:
        pools = {
            "diagnoses": AttributeKind.DIAGNOSIS,
            "lab_tests": AttributeKind.LAB_VALUE,
            "procedures": AttributeKind.PROCEDURE,
            "clinical_states": AttributeKind.STATUS,
        }
        concepts = []
        for pool, kind in pools.items():
            for concept in self.kb.classes.leaves_of(pool):
                if kind is AttributeKind.LAB_VALUE and concept not in self.kb.ranges:
                    continue
                if self._rule_members(concept) or self._known(concept):
                    continue
                if any(
                    self.kb.is_member(concept, p.first)
                    or self.kb.is_member(concept, p.second)
                    for p in self.kb.exclusivity
                ):
                    continue
                concepts.append((concept, kind))
        rng.shuffle(concepts)
        for concept, kind in concepts:
            if kind is AttributeKind.DIAGNOSIS:
                time = Marker.at(Anchor.ADMISSION)
            else:
                time = Marker.day_n(rng.randint(1, self._stay_days() - 1))
            if kind is AttributeKind.LAB_VALUE:
                value = sample_value(self.kb.ranges[concept], rng)
            else:
                value = Present()
            fact = Fact(
                entity=concept,
                kind=kind,
                value=value,
                time=time,
                surface=spaced(concept),
            )
            if self._stays_unmatched(fact):
                key = self._insert(fact, [FailureCode.NO_EVIDENCE])
                self._expect(FaultKind.FABRICATION, [key])
                return True
        return False

    def _omission(self, rng: random.Random) -> bool:
        candidates = [
            s
            for s in self._free()
            if s.fact.kind in self.key_attributes
            and self._keeps_implications([s.key])
        ]
        if not candidates:
            return False
        site = rng.choice(candidates)
        self.sites.pop(self._position(site.key))
        self.omitted.append(site.ehr_index)
        self._expect(FaultKind.OMISSION, ehr_indices=[site.ehr_index])
        return True

    def _implication_break(self, rng: random.Random) -> bool:
        baseline = self._stranded()
        candidates: List[Tuple[List[_Site], List[_Site]]] = []
        for index, rule in enumerate(self.kb.implications):
            if index in baseline:
                continue
            removed = [
                s
                for s in self.sites
                if self.kb.is_member(s.fact.entity, rule.consequent)
            ]
            if not removed or any(s.used or not s.matched for s in removed):
                continue
            without = frozenset(s.key for s in removed)
            newly = self._stranded(without) - baseline
            if index not in newly:
                continue
            antecedents = [
                s
                for s in self.sites
                if s.key not in without
                and not s.fact.negated
                and any(
                    self.kb.is_member(s.fact.entity, self.kb.implications[i].antecedent)
                    for i in newly
                )
            ]
            if any(s.used for s in antecedents):
                continue
            candidates.append((removed, antecedents))
        if not candidates:
            return False
        removed, antecedents = rng.choice(candidates)
        removed_keys = {s.key for s in removed}
        self.sites = [s for s in self.sites if s.key not in removed_keys]
        omitted = []
        for site in removed:
            if site.fact.kind not in self.key_attributes:
                continue
            still_mentioned = any(
                s.fact.kind == site.fact.kind
                and entities_equivalent(s.fact.entity, site.fact.entity, self.kb)
                for s in self.sites
            )
            if not still_mentioned:
                omitted.append(site.ehr_index)
        self.omitted.extend(omitted)
        for site in antecedents:
            self._update(site.key, codes=[FailureCode.IMPLICATION_FAIL])
        self._expect(
            FaultKind.IMPLICATION_BREAK, [s.key for s in antecedents], omitted
        )
        return True

    # Assembly

    def _result(self, skipped: Tuple[FaultKind, ...]) -> InjectionResult:
        summary_id = self.summary.doc_id
        positions = {site.key: i for i, site in enumerate(self.sites)}
        summary = Document(
            doc_id=summary_id,
            kind=DocumentKind.SUMMARY,
            structured=[site.fact.to_entry() for site in self.sites],
            admission=self.summary.admission,
            discharge=self.summary.discharge,
        )
        labels = tuple(
            GoldLabel(
                id=(summary_id, i),
                gold=Label.NOT_SUPPORTED if site.codes else Label.SUPPORTED,
            )
            for i, site in enumerate(self.sites)
        )
        expected = tuple(
            ExpectedFault(
                kind=e.kind,
                code=EXPECTED_CODES[e.kind],
                ids=tuple((summary_id, positions[k]) for k in e.site_keys),
                omissions=tuple((self.ehr.doc_id, i) for i in e.ehr_indices),
            )
            for e in self.expectations
        )
        gold = GoldRecord(
            doc_id=summary_id,
            ehr_id=self.ehr.doc_id,
            labels=labels,
            codes={i: site.codes for i, site in enumerate(self.sites) if site.codes},
            expected=expected,
            omissions=tuple((self.ehr.doc_id, i) for i in sorted(self.omitted)),
        )
        return InjectionResult(
            ehr=self.ehr, summary=summary, gold=gold, skipped=skipped
        )


def inject_faults(
    pair: Tuple[Document, Document],
    faults: Sequence[FaultSpec],
    kb: KnowledgeBase,
    strict: bool = True,
    embedder: Optional[Embedder] = None,
    tau_match: float = 0.5,
) -> InjectionResult:
    """
    Corrupt a faithful (EHR, summary) pair and record the gold labels.

    Raises:
        NoEligibleSite: in strict mode, a requested fault has no eligible site
    """
    ehr, summary = pair
    injector = FaultInjector(kb, ehr, summary, embedder=embedder, tau_match=tau_match)
    return injector.inject(faults, strict=strict)
