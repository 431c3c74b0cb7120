"""Filter-style feature scoring: chi-square, information gain and |Pearson r|."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import FeatureTable, LabelVector


class Algorithm(str, enum.Enum):
    CHI_SQUARE = "chi_square"
    INFORMATION_GAIN = "information_gain"
    CORRELATION = "correlation"


ALGORITHMS = tuple(a.value for a in Algorithm)
SHORT_NAMES = {"chi_square": "CHI", "information_gain": "IG", "correlation": "COR"}


@dataclass(frozen=True)
class FeatureScore:
    feature_index: int
    feature_name: str
    score: float


@dataclass(frozen=True)
class FeatureRanking:
    algorithm: Algorithm
    scores: tuple[FeatureScore, ...]
    order: tuple[int, ...]

    def top_k(self, k: int) -> list[int]:
        """Indices of the ``k`` best features, in original column order."""
        if not 1 <= k <= len(self.order):
            raise ValueError(f"k must be in [1, {len(self.order)}], got {k}")
        return sorted(self.order[:k])

    def ranked_names(self) -> list[str]:
        return [self.scores[i].feature_name for i in self.order]


def _as_scores(table: FeatureTable, values: np.ndarray) -> list[FeatureScore]:
    return [
        FeatureScore(j, name, float(v))
        for j, (name, v) in enumerate(zip(table.feature_names, values))
    ]


def _check_two_classes(y: np.ndarray) -> None:
    if y.size == 0 or y.min() == y.max():
        raise ValueError("chi-square scoring needs both classes present")


def chi_square_scores(
    X: FeatureTable, y: LabelVector, *, binned: bool = False, bins: int = 10
) -> list[FeatureScore]:
    """Chi-square statistic of each feature against the label.

    The default treats each feature's summed value within a class as the
    observed count for that class, with the expected count taken from the
    class prior.  ``binned=True`` instead builds a bins-by-class contingency
    table from equal-width bins.
    """
    values = X.values
    labels = y.labels
    _check_two_classes(labels)
    if binned:
        return _as_scores(X, _chi_square_binned(values, labels, bins))
    if np.any(values < 0):
        raise ValueError("chi-square scoring needs nonnegative feature values")
    n = labels.size
    total = values.sum(axis=0)
    out = np.zeros(values.shape[1])
    for cls in (0, 1):
        mask = labels == cls
        observed = values[mask].sum(axis=0)
        expected = mask.sum() / n * total
        with np.errstate(divide="ignore", invalid="ignore"):
            term = (observed - expected) ** 2 / expected
        out += np.where(expected > 0, term, 0.0)
    out[total == 0] = 0.0
    return _as_scores(X, out)


def _chi_square_binned(values: np.ndarray, labels: np.ndarray, bins: int) -> np.ndarray:
    out = np.empty(values.shape[1])
    for j in range(values.shape[1]):
        joint = binned_joint(values[:, j], labels, bins)
        joint = joint[joint.sum(axis=1) > 0]
        expected = np.outer(joint.sum(axis=1), joint.sum(axis=0)) / joint.sum()
        out[j] = float(((joint - expected) ** 2 / expected).sum())
    return out


def equal_width_bins(x: np.ndarray, bins: int) -> np.ndarray:
    """Bin index of each value over ``bins`` equal-width intervals of [min, max]."""
    if bins < 2:
        raise ValueError(f"bins must be at least 2, got {bins}")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return np.zeros(x.shape[0], dtype=np.int64)
    idx = np.floor((x - lo) / (hi - lo) * bins).astype(np.int64)
    return np.minimum(idx, bins - 1)


def binned_joint(x: np.ndarray, labels: np.ndarray, bins: int) -> np.ndarray:
    """Count table of shape (bins, 2): rows are feature bins, columns classes."""
    joint = np.zeros((bins, 2), dtype=np.float64)
    np.add.at(joint, (equal_width_bins(x, bins), labels.astype(np.int64)), 1.0)
    return joint


def entropy(counts: np.ndarray) -> float:
    """Plug-in Shannon entropy in nats of a count vector (0 ln 0 = 0)."""
    counts = np.asarray(counts, dtype=np.float64).ravel()
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def mutual_information(joint: np.ndarray) -> float:
    """I(A;B) = H(B) - H(B|A) for a count table with A along rows.

    Computed as a difference of entropies so that ``mutual_information(joint.T)``
    evaluates the other direction, H(A) - H(A|B).
    """
    joint = np.asarray(joint, dtype=np.float64)
    total = joint.sum()
    if total == 0:
        return 0.0
    row_mass = joint.sum(axis=1)
    h_cond = sum(m / total * entropy(row) for m, row in zip(row_mass, joint) if m > 0)
    return max(0.0, entropy(joint.sum(axis=0)) - h_cond)


def information_gain_scores(X: FeatureTable, y: LabelVector, bins: int = 10) -> list[FeatureScore]:
    """Plug-in mutual information (nats) between each binned feature and the label."""
    if bins < 2:
        raise ValueError(f"bins must be at least 2, got {bins}")
    values, labels = X.values, y.labels
    out = np.array(
        [mutual_information(binned_joint(values[:, j], labels, bins)) for j in range(values.shape[1])]
    )
    return _as_scores(X, out)


def correlation_scores(X: FeatureTable, y: LabelVector) -> list[FeatureScore]:
    """|Pearson r| of each feature with the label, population moments; zero variance gives 0."""
    values = X.values
    labels = y.labels.astype(np.float64)
    n = labels.size
    if n < 2:
        raise ValueError("correlation scoring needs at least 2 rows")
    xc = values - values.mean(axis=0)
    yc = labels - labels.mean()
    cov = (xc * yc[:, None]).sum(axis=0) / n
    sx = np.sqrt((xc**2).sum(axis=0) / n)
    sy = np.sqrt((yc**2).sum() / n)
    denom = sx * sy
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(denom > 0, np.abs(cov) / denom, 0.0)
    # rounding can push a perfect correlation a hair above 1
    return _as_scores(X, np.minimum(rho, 1.0))


def rank_features(scores: Sequence[FeatureScore], algorithm: Algorithm | str) -> FeatureRanking:
    if not scores:
        raise ValueError("cannot rank an empty score list")
    algorithm = Algorithm(algorithm)
    by_index = tuple(sorted(scores, key=lambda s: s.feature_index))
    if any(not np.isfinite(s.score) for s in by_index):
        raise ValueError("scores must be finite")
    order = tuple(s.feature_index for s in sorted(by_index, key=lambda s: (-s.score, s.feature_index)))
    return FeatureRanking(algorithm, by_index, order)


def score_features(
    X: FeatureTable, y: LabelVector, algorithm: Algorithm | str, *, bins: int = 10, chi_binned: bool = False
) -> FeatureRanking:
    algorithm = Algorithm(algorithm)
    if algorithm is Algorithm.CHI_SQUARE:
        scores = chi_square_scores(X, y, binned=chi_binned, bins=bins)
    elif algorithm is Algorithm.INFORMATION_GAIN:
        scores = information_gain_scores(X, y, bins)
    else:
        scores = correlation_scores(X, y)
    return rank_features(scores, algorithm)


RANKING_COLUMNS = ("rank", "feature", "algorithm", "score")


def write_ranking_csv(ranking: FeatureRanking, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RANKING_COLUMNS)
        for rank, idx in enumerate(ranking.order, 1):
            s = ranking.scores[idx]
            w.writerow([rank, s.feature_name, ranking.algorithm.value, repr(s.score)])
