"""Binary classification metrics (confusion matrix, accuracy/precision/
recall/F1, degenerate ROC/AUC for hard 0/1 scores) and telemetry series
types.

Undefined quantities (zero denominators, single-class AUC) are reported as
None, never silently coerced to 0. Records with a missing prediction are
excluded and counted separately as gaps.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(pairs: Iterable[tuple[int | None, int]]) -> tuple[ConfusionCounts, int]:
    """Count (prediction, label) pairs; positive class is attack (1).

    Returns (counts, gaps) where gaps is the number of records without a
    prediction.
    """
    tp = tn = fp = fn = gaps = 0
    for pred, label in pairs:
        if pred is None:
            gaps += 1
        elif pred == 1 and label == 1:
            tp += 1
        elif pred == 0 and label == 0:
            tn += 1
        elif pred == 1 and label == 0:
            fp += 1
        elif pred == 0 and label == 1:
            fn += 1
        else:
            raise ValueError(f"prediction/label outside {{0,1}}: ({pred}, {label})")
    return ConfusionCounts(tp, tn, fp, fn), gaps


def accuracy(c: ConfusionCounts) -> float | None:
    return (c.tp + c.tn) / c.total if c.total else None


def precision(c: ConfusionCounts) -> float | None:
    return c.tp / (c.tp + c.fp) if (c.tp + c.fp) else None


def recall(c: ConfusionCounts) -> float | None:
    return c.tp / (c.tp + c.fn) if (c.tp + c.fn) else None


def f1(c: ConfusionCounts) -> float | None:
    p, r = precision(c), recall(c)
    if p is None or r is None or p + r == 0:
        return None
    return 2 * p * r / (p + r)


def roc_auc(pairs: Iterable[tuple[int | None, int]]) -> tuple[list[tuple[float, float]], float] | None:
    """Three-point ROC for hard 0/1 scores and its trapezoid AUC.

    Returns None when the scored records contain a single class.
    """
    c, _ = confusion(pairs)
    positives = c.tp + c.fn
    negatives = c.fp + c.tn
    if positives == 0 or negatives == 0:
        return None
    tpr = c.tp / positives
    fpr = c.fp / negatives
    points = [(0.0, 0.0), (fpr, tpr), (1.0, 1.0)]
    auc = (tpr + 1.0 - fpr) / 2.0
    return points, auc


def percent(x: float | None) -> str | None:
    """Render a fraction as a 2-decimal percentage, ties away from zero."""
    if x is None:
        return None
    q = Decimal(repr(x * 100)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return f"{q}"


def metrics_report(pairs: list[tuple[int | None, int]]) -> dict:
    """The standard report block: counts, fractions, percent renderings,
    ROC/AUC, and the gap count."""
    c, gaps = confusion(pairs)
    roc = roc_auc(p for p in pairs)
    report = {
        "confusion": {"tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn},
        "accuracy": accuracy(c),
        "precision": precision(c),
        "recall": recall(c),
        "f1": f1(c),
        "auc": roc[1] if roc else None,
        "roc_points": roc[0] if roc else None,
        "gaps": gaps,
        "percent": {
            "accuracy": percent(accuracy(c)),
            "precision": percent(precision(c)),
            "recall": percent(recall(c)),
            "f1": percent(f1(c)),
        },
    }
    return report


# Telemetry -----------------------------------------------------------------

METRIC_PACKET_IN_RATE = "packet_in_rate"
METRIC_CPU_PROXY = "cpu_proxy"
METRIC_SYNC_DELAY = "sync_delay"
METRIC_VICTIM_INGRESS = "victim_ingress_pps"


@dataclass(frozen=True)
class TelemetrySeries:
    """One metric sampled at 1 s cadence for one scope (a controller or a
    host)."""

    metric: str
    scope: str
    samples: tuple[tuple[int, float], ...]

    def values(self) -> list[float]:
        return [v for _, v in self.samples]


def summarize(series: TelemetrySeries, threshold: float | None = None) -> dict:
    vals = series.values()
    out: dict = {
        "metric": series.metric,
        "scope": series.scope,
        "samples": len(vals),
        "peak": max(vals) if vals else None,
        "mean": sum(vals) / len(vals) if vals else None,
    }
    if threshold is not None:
        out["time_above_threshold_s"] = sum(1 for v in vals if v > threshold)
        out["threshold"] = threshold
    return out
