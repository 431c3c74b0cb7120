"""Binary detection metrics: confusion counts, DR/FAR/F1, rank AUC and per-sample timing."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .dataset import FeatureTable, LabelVector


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class MetricsReport:
    accuracy: float = 0.0
    recall: float = 0.0
    precision: float = 0.0
    f1: float = 0.0
    far: float = 0.0
    auc: float = 0.0
    prediction_time_us: float = 0.0
    n_features: int = 0
    classifier: str = ""
    selection: str = "full"
    degenerate: tuple[str, ...] = field(default=())

    @property
    def dr(self) -> float:
        return self.recall

    def to_dict(self) -> dict:
        out = asdict(self)
        out["degenerate"] = list(self.degenerate)
        return out


def _labels(y) -> np.ndarray:
    return np.asarray(y.labels if isinstance(y, LabelVector) else y)


def confusion(y_true, scores, threshold: float = 0.5) -> ConfusionCounts:
    """Tally predictions where ``score >= threshold`` means attack."""
    y = _labels(y_true)
    s = np.asarray(scores)
    if y.shape[0] != s.shape[0]:
        raise ValueError(f"length mismatch: {y.shape[0]} labels, {s.shape[0]} scores")
    pred = s >= threshold
    pos = y == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num: int, den: int, name: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def classification_metrics(c: ConfusionCounts) -> MetricsReport:
    """Threshold metrics; a 0/0 ratio is reported as 0 and named in ``degenerate``."""
    if c.n == 0:
        raise ValueError("confusion counts are all zero")
    flags: list[str] = []
    recall = _ratio(c.tp, c.tp + c.fn, "recall", flags)
    precision = _ratio(c.tp, c.tp + c.fp, "precision", flags)
    far = _ratio(c.fp, c.fp + c.tn, "far", flags)
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.append("f1")
    return MetricsReport(
        accuracy=(c.tp + c.tn) / c.n,
        recall=recall,
        precision=precision,
        f1=f1,
        far=far,
        degenerate=tuple(flags),
    )


def roc_auc(y_true, scores) -> float:
    """Mann-Whitney AUC: P(pos > neg) + P(tie)/2, via midranks."""
    y = _labels(y_true)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape[0] != s.shape[0]:
        raise ValueError(f"length mismatch: {y.shape[0]} labels, {s.shape[0]} scores")
    n_pos = int(np.sum(y == 1))
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def timed_predict(predict: Callable[[FeatureTable], np.ndarray], X: FeatureTable) -> tuple[np.ndarray, float]:
    """Run ``predict`` on the whole batch; returns scores and microseconds per row."""
    if X.n_rows == 0:
        raise ValueError("cannot time prediction on an empty table")
    start = time.perf_counter_ns()
    scores = predict(X)
    elapsed = time.perf_counter_ns() - start
    # a timer tick coarser than the batch would otherwise report zero
    return scores, max(elapsed, 1) / 1000.0 / X.n_rows


def evaluate(y_true, scores, threshold: float = 0.5) -> MetricsReport:
    report = classification_metrics(confusion(y_true, scores, threshold))
    report.auc = roc_auc(y_true, scores)
    return report


METRIC_COLUMNS = (
    "dataset",
    "classifier",
    "selection",
    "accuracy",
    "auc",
    "f1",
    "dr",
    "far",
    "prediction_time_us",
)
