"""
Synthetic EHR/summary corpora with controlled fault injection.
"""

from .bundle import Corpus, CorpusDocument, document_seed, generate_corpus, write_bundle
from .faults import (
    EXPECTED_CODES,
    ExpectedFault,
    FaultInjector,
    FaultKind,
    FaultSpec,
    GoldRecord,
    InjectionResult,
    inject_faults,
    load_fault_specs,
)
from .generator import DEFAULT_SIZE, Fact, PatientGenerator, generate_patient

__all__ = [
    "Corpus",
    "CorpusDocument",
    "document_seed",
    "generate_corpus",
    "write_bundle",
    "EXPECTED_CODES",
    "ExpectedFault",
    "FaultInjector",
    "FaultKind",
    "FaultSpec",
    "GoldRecord",
    "InjectionResult",
    "inject_faults",
    "load_fault_specs",
    "DEFAULT_SIZE",
    "Fact",
    "PatientGenerator",
    "generate_patient",
]
