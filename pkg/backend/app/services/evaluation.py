"""
Evaluation of verdicts against gold labels.

Supported is the positive class. Rates are computed in exact rational
arithmetic and rendered as floats only in the final report.
"""
import logging
import math
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import Field

from app.models.base import FrozenModel
from app.models.verdict import GoldLabel, Label, Verdict
from app.services.errors import DataError, IdMismatch

logger = logging.getLogger(__name__)

CONFIDENCE_CLIP = (0.01, 0.99)

METRIC_NAMES = (
    "precision",
    "recall",
    "f1",
    "accuracy",
    "specificity",
    "balanced_accuracy",
    "mcc",
    "fdr",
    "log_loss",
)


class ConfusionMatrix(FrozenModel):
    tp: int = Field(default=0, ge=0)
    fp: int = Field(default=0, ge=0)
    fn: int = Field(default=0, ge=0)
    tn: int = Field(default=0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )

    def swapped(self) -> "ConfusionMatrix":
        """The same counts with the positive class flipped."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)

    def to_json_dict(self) -> Dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


class MetricReport(FrozenModel):
    """Metric values for one confusion matrix, plus the guarded metrics."""
    confusion: ConfusionMatrix
    precision: float
    recall: float
    f1: float
    accuracy: float
    specificity: float
    balanced_accuracy: float
    mcc: float
    fdr: float
    log_loss: Optional[float] = None
    degenerate: Tuple[str, ...] = ()

    def to_json_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"confusion": self.confusion.to_json_dict()}
        for name in METRIC_NAMES:
            value = getattr(self, name)
            data[name] = None if value is None else round(value, 6)
        data["degenerate"] = list(self.degenerate)
        return data


def confusion(
    predicted: Sequence[Verdict], gold: Sequence[GoldLabel]
) -> ConfusionMatrix:
    """
    Count predictions against gold labels.

    Raises:
        IdMismatch: the lists differ in length or in the id at any position
    """
    if len(predicted) != len(gold):
        raise IdMismatch(f"{len(predicted)} verdicts but {len(gold)} gold labels")
    counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for verdict, label in zip(predicted, gold):
        if tuple(verdict.proposition_id) != tuple(label.id):
            raise IdMismatch(
                f"verdict {list(verdict.proposition_id)} "
                f"aligned with gold {list(label.id)}"
            )
        predicted_positive = verdict.label is Label.SUPPORTED
        gold_positive = label.gold is Label.SUPPORTED
        if predicted_positive and gold_positive:
            counts["tp"] += 1
        elif predicted_positive:
            counts["fp"] += 1
        elif gold_positive:
            counts["fn"] += 1
        else:
            counts["tn"] += 1
    return ConfusionMatrix(**counts)


def _ratio(numerator: int, denominator: int) -> Optional[Fraction]:
    return Fraction(numerator, denominator) if denominator else None


def rates(cm: ConfusionMatrix) -> Dict[str, Optional[Fraction]]:
    """
    Exact rational rates; a metric with a zero denominator maps to None.

    MCC is irrational in general and is left to :func:`compute_metrics`.
    """
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    specificity = _ratio(cm.tn, cm.tn + cm.fp)
    f1 = None
    if precision is not None and recall is not None and precision + recall:
        f1 = 2 * precision * recall / (precision + recall)
    balanced = None
    if recall is not None and specificity is not None:
        balanced = (recall + specificity) / 2
    return {
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "accuracy": _ratio(cm.tp + cm.tn, cm.total),
        "specificity": specificity,
        "balanced_accuracy": balanced,
        "fdr": _ratio(cm.fp, cm.tp + cm.fp),
    }


def matthews(cm: ConfusionMatrix) -> Optional[float]:
    product = (cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fp) * (cm.tn + cm.fn)
    if product == 0:
        return None
    return (cm.tp * cm.tn - cm.fp * cm.fn) / math.sqrt(product)


def log_loss(scored: Sequence[Tuple[bool, float]]) -> float:
    """
    Mean binary cross-entropy of (gold is Supported, confidence) pairs.

    Confidences are read as the probability of Supported and clipped to
    ``CONFIDENCE_CLIP``.
    """
    low, high = CONFIDENCE_CLIP
    total = 0.0
    for positive, confidence in scored:
        c = min(high, max(low, confidence))
        total += -math.log(c) if positive else -math.log(1.0 - c)
    return total / len(scored)


def compute_metrics(
    cm: ConfusionMatrix,
    confidences: Optional[Sequence[Tuple[bool, float]]] = None,
) -> MetricReport:
    """
    Every metric of one confusion matrix.

    Zero-denominator metrics are reported as 0 and named in ``degenerate``.
    Log loss is computed only when per-item confidences are given.

    Raises:
        IdMismatch: confidences do not cover the matrix
    """
    exact = rates(cm)
    values: Dict[str, float] = {}
    degenerate: List[str] = []
    for name, value in exact.items():
        if value is None:
            degenerate.append(name)
            values[name] = 0.0
        else:
            values[name] = float(value)

    mcc = matthews(cm)
    if mcc is None:
        degenerate.append("mcc")
        mcc = 0.0

    loss = None
    if confidences is not None:
        if len(confidences) != cm.total:
            raise IdMismatch(
                f"{len(confidences)} confidences for {cm.total} labeled propositions"
            )
        if confidences:
            loss = log_loss(confidences)
        else:
            degenerate.append("log_loss")

    if degenerate:
        logger.warning("Degenerate metrics", extra={"metrics": sorted(degenerate)})
    return MetricReport(
        confusion=cm,
        mcc=mcc,
        log_loss=loss,
        degenerate=tuple(sorted(degenerate)),
        **values,
    )


def align_gold(
    verdicts: Sequence[Verdict], gold_labels: Sequence[GoldLabel]
) -> List[GoldLabel]:
    """
    Reorder gold labels to follow the verdict order.

    Raises:
        IdMismatch: the two id sets differ
    """
    by_id = {tuple(label.id): label for label in gold_labels}
    if len(by_id) != len(gold_labels):
        raise IdMismatch("gold labels repeat a proposition id")
    verdict_ids = [tuple(v.proposition_id) for v in verdicts]
    missing = [list(pid) for pid in verdict_ids if pid not in by_id]
    extra = sorted(set(by_id) - set(verdict_ids))
    if missing or extra:
        unexpected = [list(e) for e in extra[:3]]
        raise IdMismatch(
            f"gold labels missing {missing[:3]} and unexpected {unexpected}"
        )
    return [by_id[pid] for pid in verdict_ids]


def evaluate(
    verdicts: Sequence[Verdict], gold_labels: Sequence[GoldLabel]
) -> MetricReport:
    """Align, count and score one document's verdicts."""
    ordered = align_gold(verdicts, gold_labels)
    cm = confusion(verdicts, ordered)
    scored = [
        (g.gold is Label.SUPPORTED, v.confidence) for v, g in zip(verdicts, ordered)
    ]
    return compute_metrics(cm, scored)


def evaluate_many(
    pairs: Sequence[Tuple[Sequence[Verdict], Sequence[GoldLabel]]]
) -> MetricReport:
    """Pool several documents into one confusion matrix before scoring."""
    cm = ConfusionMatrix()
    scored: List[Tuple[bool, float]] = []
    for verdicts, gold_labels in pairs:
        ordered = align_gold(verdicts, gold_labels)
        cm = cm + confusion(verdicts, ordered)
        scored.extend(
            (g.gold is Label.SUPPORTED, v.confidence)
            for v, g in zip(verdicts, ordered)
        )
    return compute_metrics(cm, scored)


def gold_labels_from_json(data: Dict[str, Any]) -> List[GoldLabel]:
    """
    Parse the ``labels`` list of a gold file.

    Raises:
        DataError: a label is malformed
    """
    labels: List[GoldLabel] = []
    for position, item in enumerate(data.get("labels", [])):
        try:
            labels.append(GoldLabel(id=tuple(item["id"]), gold=Label(item["gold"])))
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(
                f"gold label {position} is malformed: {e}", original_exception=e
            )
    return labels


def render_table(report: MetricReport) -> str:
    """Aligned two-column text table of a metric report."""
    rows: List[Tuple[str, str]] = []
    for name in METRIC_NAMES:
        value = getattr(report, name)
        rows.append((name, "-" if value is None else f"{value:.4f}"))
    cm = report.confusion
    rows.extend(
        [("tp", str(cm.tp)), ("fp", str(cm.fp)), ("fn", str(cm.fn)), ("tn", str(cm.tn))]
    )
    width = max(len(name) for name, _ in rows)
    value_width = max(len("value"), *(len(value) for _, value in rows))
    lines = [
        f"{'metric'.ljust(width)}  {'value'.rjust(value_width)}",
        f"{'-' * width}  {'-' * value_width}",
    ]
    lines.extend(
        f"{name.ljust(width)}  {value.rjust(value_width)}" for name, value in rows
    )
    if report.degenerate:
        lines.append(f"degenerate: {', '.join(report.degenerate)}")
    return "\n".join(lines) + "\n"
