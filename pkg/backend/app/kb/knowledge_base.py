"""
Immutable clinical knowledge base.

Holds the synonym lexicon, the is-a class graph, implication rules,
exclusivity pairs, the unit table, cue phrase lists and the value ranges the
corpus generator samples from. Built once by ``load_kb`` and then shared
read-only between threads.
"""
import re
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

from flashtext import KeywordProcessor

from app.models.base import FrozenModel
from app.models.proposition import AttributeKind, ConceptId, Frequency, Quantity
from app.models.rational import Rational
from app.services.errors import CycleError, DimensionMismatch, UnknownUnit

_NON_ALNUM = re.compile(r"[^0-9a-z]+")
TIME_DIMENSION = "time"

# Top-level vocabulary classes and the attribute kind a bare mention implies.
CATEGORY_ATTRIBUTES: Dict[str, AttributeKind] = {
    "diagnoses": AttributeKind.DIAGNOSIS,
    "medications": AttributeKind.TREATMENT,
    "lab_tests": AttributeKind.LAB_VALUE,
    "procedures": AttributeKind.PROCEDURE,
    "clinical_states": AttributeKind.STATUS,
    "events": AttributeKind.EVENT,
}

CUE_CATEGORIES: Tuple[str, ...] = (
    "negation",
    "negation_post",
    "termination",
    "qualitative",
    "abbreviation",
) + tuple(kind.value for kind in AttributeKind)

DEFAULT_CUES: Dict[str, Tuple[str, ...]] = {
    "negation": (
        "no", "not", "denies", "denied", "without", "ruled out", "negative for",
        "no evidence of", "absence of", "never", "free of",
    ),
    "negation_post": ("not", "never", "ruled out", "absent", "declined", "held"),
    "termination": ("but", "however", "although", "though", "except", "yet"),
    "qualitative": (
        "positive", "negative", "elevated", "decreased", "low", "high", "normal",
        "abnormal", "resolved", "stable", "improved", "worsened", "persistent",
        "persisted",
    ),
    "abbreviation": (
        "dr.", "mr.", "mrs.", "ms.", "pt.", "approx.", "vs.", "e.g.", "i.e.",
        "etc.", "hx.", "dx.",
    ),
    "diagnosis": ("diagnosed with", "diagnosis of", "history of", "consistent with"),
    "treatment": (
        "treated with", "started on", "prescribed", "given", "administered",
        "received", "continued on", "started",
    ),
    "procedure": ("underwent", "status post", "s p", "performed"),
    "medication": ("takes", "taking", "home medication", "home medications"),
    "lab_value": ("lab value", "measured at", "level of"),
    "status": ("remained", "became"),
    "event": ("admitted", "discharged", "transferred"),
    "dosage": ("dose of",),
}


def surface_key(text: str) -> str:
    """
    Case, whitespace and punctuation insensitive lookup key.

    ``"Heart-Attack "`` becomes ``"heart attack"``.
    """
    return _NON_ALNUM.sub(" ", text.lower()).strip()


def canonical_token(text: str) -> ConceptId:
    """Lowercased, punctuation-stripped, whitespace-collapsed concept token."""
    return "_".join(surface_key(text).split())


class UnitSpec(FrozenModel):
    dimension: str
    factor: Rational


class ImplicationRule(FrozenModel):
    antecedent: ConceptId
    consequent: ConceptId


class ExclusivityPair(FrozenModel):
    """Unordered pair; stored with members sorted."""
    first: ConceptId
    second: ConceptId

    @classmethod
    def of(cls, a: ConceptId, b: ConceptId) -> "ExclusivityPair":
        first, second = sorted((a, b))
        return cls(first=first, second=second)


class ReferenceRange(FrozenModel):
    """Sampling range for a lab or dose; pairs set the ``*_second`` bounds."""
    concept: ConceptId
    unit: str
    low: Rational
    high: Rational
    low_second: Optional[Rational] = None
    high_second: Optional[Rational] = None

    @property
    def is_pair(self) -> bool:
        return self.low_second is not None


class SynonymLexicon:
    """Surface form -> concept lookup keyed by ``surface_key``."""

    def __init__(self, forms: Mapping[str, ConceptId]):
        self._forms = MappingProxyType(dict(forms))
        # longest-match scanner over the surface keys, yielding concept ids
        self.keyword_processor = KeywordProcessor(case_sensitive=False)
        for key, concept in self._forms.items():
            if key:
                self.keyword_processor.add_keyword(key, concept)

    def lookup(self, surface: str) -> Optional[ConceptId]:
        return self._forms.get(surface_key(surface))

    def lookup_key(self, key: str) -> Optional[ConceptId]:
        return self._forms.get(key)

    def surfaces_of(self, concept: ConceptId) -> List[str]:
        return sorted(key for key, value in self._forms.items() if value == concept)

    @property
    def forms(self) -> Mapping[str, ConceptId]:
        return self._forms

    def __len__(self) -> int:
        return len(self._forms)


class ConceptClassGraph:
    """Acyclic is-a graph with precomputed ancestor sets."""

    def __init__(
        self,
        parents: Mapping[ConceptId, Tuple[ConceptId, ...]],
        ancestors: Mapping[ConceptId, FrozenSet[ConceptId]],
    ):
        self._parents = MappingProxyType(dict(parents))
        self._ancestors = MappingProxyType(dict(ancestors))

    @classmethod
    def from_edges(
        cls, edges: Iterable[Tuple[ConceptId, ConceptId]]
    ) -> "ConceptClassGraph":
        """
        Build the graph from (member, class) edges.

        Raises:
            CycleError: naming the concept path that closes a cycle
        """
        parents: Dict[ConceptId, List[ConceptId]] = {}
        for member, klass in edges:
            bucket = parents.setdefault(member, [])
            if klass not in bucket:
                bucket.append(klass)
            parents.setdefault(klass, [])

        ancestors: Dict[ConceptId, FrozenSet[ConceptId]] = {}
        path: List[ConceptId] = []
        on_path: Set[ConceptId] = set()

        def visit(node: ConceptId) -> FrozenSet[ConceptId]:
            if node in ancestors:
                return ancestors[node]
            if node in on_path:
                raise CycleError(path[path.index(node):] + [node])
            on_path.add(node)
            path.append(node)
            found: Set[ConceptId] = set()
            for parent in parents[node]:
                found.add(parent)
                found |= visit(parent)
            path.pop()
            on_path.discard(node)
            ancestors[node] = frozenset(found)
            return ancestors[node]

        for node in sorted(parents):
            visit(node)
        return cls({k: tuple(v) for k, v in parents.items()}, ancestors)

    def is_member(self, concept: ConceptId, klass: ConceptId) -> bool:
        return concept == klass or klass in self._ancestors.get(concept, frozenset())

    def ancestors(self, concept: ConceptId) -> FrozenSet[ConceptId]:
        return self._ancestors.get(concept, frozenset())

    def members_of(self, klass: ConceptId) -> List[ConceptId]:
        """Every concept strictly below ``klass``, sorted."""
        return sorted(c for c, ups in self._ancestors.items() if klass in ups)

    def leaves_of(self, klass: ConceptId) -> List[ConceptId]:
        """Members of ``klass`` that have no members themselves."""
        members = self.members_of(klass)
        return [c for c in members if not self.members_of(c)]

    @property
    def nodes(self) -> List[ConceptId]:
        return sorted(self._parents)


class UnitTable:
    """Unit -> (dimension, factor to the dimension's base unit)."""

    def __init__(self, units: Mapping[str, UnitSpec]):
        self._units = MappingProxyType(dict(units))
        self._by_lower: Dict[str, str] = {}
        for unit in units:
            self._by_lower.setdefault(unit.lower(), unit)

    def resolve(self, unit: str) -> Optional[str]:
        """Registered spelling of ``unit``, exact match first, then case-insensitive."""
        if unit in self._units:
            return unit
        return self._by_lower.get(unit.lower())

    def spec(self, unit: str) -> UnitSpec:
        resolved = self.resolve(unit)
        if resolved is None:
            raise UnknownUnit(unit)
        return self._units[resolved]

    def dimension(self, unit: str) -> Optional[str]:
        resolved = self.resolve(unit)
        return self._units[resolved].dimension if resolved else None

    def to_base(self, magnitude: Fraction, unit: str) -> Tuple[Fraction, str]:
        spec = self.spec(unit)
        return magnitude * spec.factor, spec.dimension

    def units_in(self, dimension: str) -> List[str]:
        return sorted(
            u for u, spec in self._units.items() if spec.dimension == dimension
        )

    def convert(self, quantity: Quantity, target_unit: str) -> Quantity:
        source = self.spec(quantity.unit)
        target = self.spec(target_unit)
        if source.dimension != target.dimension:
            raise DimensionMismatch(quantity.unit, target_unit)
        magnitude = quantity.magnitude * source.factor / target.factor
        unit = self.resolve(target_unit) or target_unit
        return Quantity(magnitude=magnitude, unit=unit)

    @property
    def names(self) -> List[str]:
        return list(self._units)

    def __contains__(self, unit: object) -> bool:
        return isinstance(unit, str) and self.resolve(unit) is not None


class KnowledgeBase:
    """
    Read-only bundle of every lexicon the pipeline consults.

    Attributes:
        lexicon: surface form -> concept
        classes: is-a graph
        implications: antecedent => consequent rules
        exclusivity: mutually exclusive concept pairs
        units: unit table
        cues: cue phrases per category
        ranges: sampling ranges per concept
    """

    def __init__(
        self,
        lexicon: SynonymLexicon,
        classes: ConceptClassGraph,
        implications: Iterable[ImplicationRule],
        exclusivity: Iterable[ExclusivityPair],
        units: UnitTable,
        cues: Optional[Mapping[str, Tuple[str, ...]]] = None,
        ranges: Optional[Mapping[ConceptId, ReferenceRange]] = None,
        source: Optional[str] = None,
    ):
        self.lexicon = lexicon
        self.classes = classes
        self.implications: Tuple[ImplicationRule, ...] = tuple(implications)
        self.exclusivity: FrozenSet[ExclusivityPair] = frozenset(exclusivity)
        self.units = units
        self.cues = MappingProxyType(dict(cues or DEFAULT_CUES))
        self.ranges = MappingProxyType(dict(ranges or {}))
        self.source = source

    def normalize_concept(self, surface: str) -> ConceptId:
        key = surface_key(surface)
        concept = self.lexicon.lookup_key(key)
        return concept if concept is not None else "_".join(key.split())

    def is_member(self, concept: ConceptId, klass: ConceptId) -> bool:
        return self.classes.is_member(concept, klass)

    def members_of(self, klass: ConceptId) -> List[ConceptId]:
        return self.classes.members_of(klass)

    def category_of(self, concept: ConceptId) -> Optional[str]:
        for category in CATEGORY_ATTRIBUTES:
            if self.is_member(concept, category):
                return category
        return None

    def are_exclusive(self, a: ConceptId, b: ConceptId) -> bool:
        """Registered pair lookup, symmetric in its arguments."""
        return a != b and ExclusivityPair.of(a, b) in self.exclusivity

    def exclusive_resolved(self, a: ConceptId, b: ConceptId) -> bool:
        """True when the concepts fall under the two sides of some registered pair."""
        for pair in self.exclusivity:
            if self.is_member(a, pair.first) and self.is_member(b, pair.second):
                return True
            if self.is_member(a, pair.second) and self.is_member(b, pair.first):
                return True
        return False

    def exclusive_partners(self, concept: ConceptId) -> List[ConceptId]:
        partners = set()
        for pair in self.exclusivity:
            if concept == pair.first:
                partners.add(pair.second)
            elif concept == pair.second:
                partners.add(pair.first)
        return sorted(partners)

    def convert_unit(self, quantity: Quantity, target_unit: str) -> Quantity:
        return self.units.convert(quantity, target_unit)

    def frequency_rate(self, frequency: Frequency) -> Fraction:
        """Occurrences per base time unit (per day with the bundled table)."""
        spec = self.units.spec(frequency.per)
        if spec.dimension != TIME_DIMENSION:
            raise DimensionMismatch(frequency.per, "day")
        return frequency.count / spec.factor

    def cue_phrases(self, category: str) -> Tuple[str, ...]:
        return self.cues.get(category, ())

    @cached_property
    def concepts(self) -> FrozenSet[ConceptId]:
        found: Set[ConceptId] = set(self.lexicon.forms.values())
        found.update(self.classes.nodes)
        for rule in self.implications:
            found.update((rule.antecedent, rule.consequent))
        for pair in self.exclusivity:
            found.update((pair.first, pair.second))
        found.update(self.ranges)
        return frozenset(found)

    @cached_property
    def unit_pattern(self) -> str:
        """Regex alternation of registered units, longest first."""
        names = sorted(self.units.names, key=lambda u: (-len(u), u))
        return "|".join(re.escape(name) for name in names)


def normalize_concept(surface: str, kb: KnowledgeBase) -> ConceptId:
    """Map a surface form to its concept id; unknown forms become a canonical token."""
    return kb.normalize_concept(surface)


def convert_unit(quantity: Quantity, target_unit: str, kb: KnowledgeBase) -> Quantity:
    """
    Exact unit conversion within one dimension.

    Raises:
        UnknownUnit: either unit is not registered
        DimensionMismatch: the units measure different dimensions
    """
    return kb.convert_unit(quantity, target_unit)
