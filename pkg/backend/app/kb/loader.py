"""
TSV loader for knowledge-base bundles.

A bundle is a directory (or an explicit set of files) holding the five
required tables ``synonyms.tsv``, ``classes.tsv``, ``implications.tsv``,
``exclusivity.tsv`` and ``units.tsv``, plus the optional ``cues.tsv`` and
``ranges.tsv``. Lines are tab separated, ``#`` starts a comment line,
blank lines are skipped and trailing whitespace is ignored.
"""
import logging
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from app.kb.knowledge_base import (
    CUE_CATEGORIES,
    DEFAULT_CUES,
    ConceptClassGraph,
    ExclusivityPair,
    ImplicationRule,
    KnowledgeBase,
    ReferenceRange,
    SynonymLexicon,
    UnitSpec,
    UnitTable,
    canonical_token,
    surface_key,
)
from app.models.rational import to_fraction
from app.services.errors import CycleError, DataError, DuplicateSurfaceForm, ParseError

logger = logging.getLogger(__name__)

REQUIRED_FILES = ("synonyms", "classes", "implications", "exclusivity", "units")
OPTIONAL_FILES = ("cues", "ranges")

DEFAULT_KB_DIR = Path(__file__).resolve().parent / "data"

KBSource = Union[str, Path, Mapping[str, Union[str, Path]], Iterable[Union[str, Path]]]


def read_tsv(path: Path, columns: int) -> Iterator[Tuple[int, List[str]]]:
    """Yield ``(line_number, fields)`` for every data line of a TSV file."""
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.rstrip()
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = [field.strip() for field in line.split("\t")]
            if len(fields) != columns:
                raise ParseError(
                    number,
                    f"expected {columns} tab-separated fields, got {len(fields)}",
                    path=str(path),
                )
            if not all(fields):
                raise ParseError(number, "empty field", path=str(path))
            yield number, fields


def _parse_rational(text: str, number: int, path: Path) -> Fraction:
    try:
        return to_fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(number, f"not a number: '{text}'", path=str(path)) from exc


def _resolve_files(source: KBSource) -> Dict[str, Path]:
    if isinstance(source, (str, Path)):
        directory = Path(source)
        if not directory.is_dir():
            raise DataError(
                f"knowledge base directory not found: {directory}",
                path=str(directory),
            )
        candidates = {
            name: directory / f"{name}.tsv"
            for name in REQUIRED_FILES + OPTIONAL_FILES
        }
        files = {name: path for name, path in candidates.items() if path.is_file()}
    elif isinstance(source, Mapping):
        files = {name: Path(path) for name, path in source.items()}
    else:
        files = {Path(path).stem: Path(path) for path in source}

    missing = [name for name in REQUIRED_FILES if name not in files]
    if missing:
        names = ", ".join(f"{m}.tsv" for m in missing)
        raise DataError(f"knowledge base is missing required files: {names}")
    for name, path in files.items():
        if not path.is_file():
            raise DataError(f"knowledge base file not found: {path}", path=str(path))
    return files


def _load_synonyms(path: Path) -> Tuple[Dict[str, str], Dict[str, int]]:
    forms: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    for number, (surface, concept) in read_tsv(path, 2):
        key = surface_key(surface)
        concept_id = canonical_token(concept)
        if not key or not concept_id:
            raise ParseError(
                number,
                "surface form and concept must contain letters or digits",
                path=str(path),
            )
        if key in forms:
            raise DuplicateSurfaceForm(surface, path=str(path), line=number)
        forms[key] = concept_id
        lines[key] = number
    return forms, lines


def _load_classes(path: Path) -> ConceptClassGraph:
    edges: List[Tuple[str, str]] = []
    for number, (member, klass) in read_tsv(path, 2):
        edges.append((canonical_token(member), canonical_token(klass)))
    try:
        return ConceptClassGraph.from_edges(edges)
    except CycleError as exc:
        raise CycleError(exc.cycle, path=str(path)) from exc


def _load_implications(path: Path) -> List[ImplicationRule]:
    rules: List[ImplicationRule] = []
    for number, (antecedent, consequent) in read_tsv(path, 2):
        rule = ImplicationRule(
            antecedent=canonical_token(antecedent),
            consequent=canonical_token(consequent),
        )
        if rule.antecedent == rule.consequent:
            raise ParseError(
                number,
                f"antecedent equals consequent: '{rule.antecedent}'",
                path=str(path),
            )
        if rule not in rules:
            rules.append(rule)
    return rules


def _load_exclusivity(path: Path) -> List[ExclusivityPair]:
    pairs: List[ExclusivityPair] = []
    for number, (first, second) in read_tsv(path, 2):
        a, b = canonical_token(first), canonical_token(second)
        if a == b:
            raise ParseError(
                number, f"exclusivity pair members must differ: '{a}'", path=str(path)
            )
        pair = ExclusivityPair.of(a, b)
        if pair not in pairs:
            pairs.append(pair)
    return pairs


def _load_units(path: Path) -> UnitTable:
    units: Dict[str, UnitSpec] = {}
    bases: Dict[str, List[int]] = {}
    first_line: Dict[str, int] = {}
    for number, (unit, dimension, factor_text) in read_tsv(path, 3):
        if unit in units:
            raise ParseError(number, f"unit '{unit}' registered twice", path=str(path))
        factor = _parse_rational(factor_text, number, path)
        if factor <= 0:
            raise ParseError(
                number, f"factor must be positive, got {factor_text}", path=str(path)
            )
        units[unit] = UnitSpec(dimension=dimension, factor=factor)
        first_line.setdefault(dimension, number)
        if factor == 1:
            bases.setdefault(dimension, []).append(number)

    for dimension, number in first_line.items():
        base_lines = bases.get(dimension, [])
        if not base_lines:
            raise ParseError(
                number,
                f"dimension '{dimension}' has no base unit with factor 1",
                path=str(path),
            )
        if len(base_lines) > 1:
            raise ParseError(
                base_lines[1],
                f"dimension '{dimension}' has more than one base unit",
                path=str(path),
            )
    return UnitTable(units)


def _load_cues(path: Optional[Path]) -> Dict[str, Tuple[str, ...]]:
    cues: Dict[str, List[str]] = {
        category: list(phrases) for category, phrases in DEFAULT_CUES.items()
    }
    if path is None:
        return {category: tuple(phrases) for category, phrases in cues.items()}
    for number, (category, phrase) in read_tsv(path, 2):
        if category not in CUE_CATEGORIES:
            raise ParseError(
                number, f"unknown cue category '{category}'", path=str(path)
            )
        bucket = cues.setdefault(category, [])
        phrase = phrase.lower()
        if phrase not in bucket:
            bucket.append(phrase)
    return {category: tuple(phrases) for category, phrases in cues.items()}


def _load_ranges(path: Optional[Path], units: UnitTable) -> Dict[str, ReferenceRange]:
    ranges: Dict[str, ReferenceRange] = {}
    if path is None:
        return ranges
    for number, (concept, unit, low, high) in read_tsv(path, 4):
        resolved = units.resolve(unit)
        if resolved is None:
            raise ParseError(number, f"unknown unit '{unit}'", path=str(path))
        concept_id = canonical_token(concept)
        if "/" in low or "/" in high:
            low_parts, high_parts = low.split("/"), high.split("/")
            if len(low_parts) != 2 or len(high_parts) != 2:
                raise ParseError(
                    number,
                    "pair ranges need 'first/second' on both bounds",
                    path=str(path),
                )
            bounds = [
                _parse_rational(part, number, path) for part in low_parts + high_parts
            ]
            entry = ReferenceRange(
                concept=concept_id,
                unit=resolved,
                low=bounds[0],
                low_second=bounds[1],
                high=bounds[2],
                high_second=bounds[3],
            )
            if entry.low > entry.high or entry.low_second > entry.high_second:
                raise ParseError(number, "low bound exceeds high bound", path=str(path))
        else:
            entry = ReferenceRange(
                concept=concept_id,
                unit=resolved,
                low=_parse_rational(low, number, path),
                high=_parse_rational(high, number, path),
            )
            if entry.low > entry.high:
                raise ParseError(number, "low bound exceeds high bound", path=str(path))
        ranges[concept_id] = entry
    return ranges


def _register_concept_ids(
    forms: Dict[str, str], concepts: Iterable[str], path: Path
) -> None:
    """Register each concept id's spaced form as a surface form of itself."""
    for concept in sorted(set(concepts)):
        key = " ".join(concept.split("_"))
        owner = forms.get(key)
        if owner is None:
            forms[key] = concept
        elif owner != concept:
            raise DuplicateSurfaceForm(key, path=str(path))


def load_kb(source: KBSource) -> KnowledgeBase:
    """
    Load and validate a knowledge-base bundle.

    Args:
        source: bundle directory, a mapping of table name to file, or an
            iterable of file paths named after their table

    Raises:
        ParseError: a line is malformed (carries the line number)
        CycleError: the class graph is cyclic
        DuplicateSurfaceForm: a surface form maps to two concepts
        DataError: a required file is missing
    """
    files = _resolve_files(source)
    forms, _ = _load_synonyms(files["synonyms"])
    classes = _load_classes(files["classes"])
    implications = _load_implications(files["implications"])
    exclusivity = _load_exclusivity(files["exclusivity"])
    units = _load_units(files["units"])
    cues = _load_cues(files.get("cues"))
    ranges = _load_ranges(files.get("ranges"), units)

    concepts: List[str] = list(forms.values()) + classes.nodes + list(ranges)
    for rule in implications:
        concepts.extend((rule.antecedent, rule.consequent))
    for pair in exclusivity:
        concepts.extend((pair.first, pair.second))
    _register_concept_ids(forms, concepts, files["synonyms"])

    kb = KnowledgeBase(
        lexicon=SynonymLexicon(forms),
        classes=classes,
        implications=implications,
        exclusivity=exclusivity,
        units=units,
        cues=cues,
        ranges=ranges,
        source=str(files["synonyms"].parent),
    )
    dimensions = Counter(units.dimension(name) for name in units.names)
    logger.info(
        "Knowledge base loaded",
        extra={
            "kb_source": kb.source,
            "surface_forms": len(kb.lexicon),
            "concepts": len(kb.concepts),
            "implications": len(kb.implications),
            "exclusivity_pairs": len(kb.exclusivity),
            "units": len(units.names),
            "dimensions": len(dimensions),
        },
    )
    return kb


@lru_cache(maxsize=None)
def _cached_kb(directory: str) -> KnowledgeBase:
    return load_kb(Path(directory))


def default_kb(directory: Optional[Union[str, Path]] = None) -> KnowledgeBase:
    """KB for ``directory`` (the bundled data by default), loaded once per process."""
    return _cached_kb(str(Path(directory or DEFAULT_KB_DIR).resolve()))
