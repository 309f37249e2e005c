"""
Services for veriprop: the error hierarchy and evaluation metrics.

The verification orchestrator lives in ``app.services.verification_service``;
it is not re-exported here because the knowledge base imports this package
for its errors.
"""

from .errors import DataError, UsageError, VeripropError
from .evaluation import (
    ConfusionMatrix,
    MetricReport,
    compute_metrics,
    confusion,
    evaluate,
)

__all__ = [
    "DataError",
    "UsageError",
    "VeripropError",
    "ConfusionMatrix",
    "MetricReport",
    "compute_metrics",
    "confusion",
    "evaluate",
]
