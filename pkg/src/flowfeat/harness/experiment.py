"""Rankings, incremental subset sweeps and the hidden-label audit.

Every evaluation partition (one per fold, or the single holdout split) is
normalized and ranked using its training rows only.  Model seeds depend on
(classifier, fold) and nothing else, so two cells that end up with the same
feature columns train identical models; the k = d cell therefore reproduces
the full-feature baseline exactly.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from ..dataset import DataError, FeatureTable, LabelVector, minmax_apply, minmax_fit, stratified_kfold, stratified_split
from ..metrics import MetricsReport, evaluate, timed_predict
from ..model import fit, predict
from ..rng import derive_seed
from ..selection import SHORT_NAMES, FeatureRanking, score_features
from .plan import ExperimentPlan

log = logging.getLogger(__name__)

_AVERAGED = ("accuracy", "recall", "precision", "f1", "far", "auc", "prediction_time_us")


@dataclass(frozen=True, eq=False)
class Partition:
    """One train/test partition with min-max scaling fitted on its train rows."""

    index: int
    train_rows: np.ndarray
    test_rows: np.ndarray
    train: FeatureTable
    test: FeatureTable
    y_train: LabelVector
    y_test: LabelVector
    # rows whose values were used to fit normalization and rankings
    fit_rows: np.ndarray


def partitions(table: FeatureTable, y: LabelVector, plan: ExperimentPlan) -> list[Partition]:
    if table.n_rows != len(y):
        raise DataError(f"{table.n_rows} feature rows but {len(y)} labels")
    if plan.mode == "holdout":
        sp = stratified_split(y, plan.ratio, plan.seed)
        splits = [(sp.train_indices, sp.test_indices)]
    else:
        fp = stratified_kfold(y, plan.k, plan.seed)
        splits = [fp.train_test(f) for f in range(plan.k)]
    out = []
    for i, (tr, te) in enumerate(splits):
        raw_train = table.rows(tr)
        stats = minmax_fit(raw_train)
        out.append(
            Partition(
                index=i,
                train_rows=tr,
                test_rows=te,
                train=minmax_apply(raw_train, stats),
                test=minmax_apply(table.rows(te), stats),
                y_train=y.take(tr),
                y_test=y.take(te),
                fit_rows=raw_train.row_index.copy(),
            )
        )
    return out


@dataclass
class Rankings:
    """Per-algorithm rankings, one per partition."""

    per_fold: dict[str, list[FeatureRanking]]
    fit_rows: list[np.ndarray] = field(default_factory=list)
    feature_names: tuple[str, ...] = ()

    def primary(self, algorithm: str) -> FeatureRanking:
        """Ranking from the first training partition (the one exported as a table)."""
        return self.per_fold[algorithm][0]


def run_rankings(table: FeatureTable, y: LabelVector, plan: ExperimentPlan, parts: list[Partition] | None = None) -> Rankings:
    parts = parts if parts is not None else partitions(table, y, plan)
    per_fold = {
        algo: [score_features(p.train, p.y_train, algo, bins=plan.ig_bins, chi_binned=plan.chi_binned) for p in parts]
        for algo in plan.algorithms
    }
    return Rankings(per_fold, [p.fit_rows for p in parts], table.feature_names)


@dataclass
class CellResult:
    mean: MetricsReport | None
    folds: list[MetricsReport]
    features: list[str]
    error: str | None = None


@dataclass
class SweepResult:
    dataset: str
    feature_names: tuple[str, ...]
    max_subset_size: int
    cells: dict[tuple[str, str, int], CellResult]
    baselines: dict[str, CellResult]
    rankings: Rankings
    plan: ExperimentPlan
    provenance: list[str] = field(default_factory=list)

    @property
    def algorithms(self) -> list[str]:
        return list(dict.fromkeys(a for a, _, _ in self.cells))

    @property
    def classifiers(self) -> list[str]:
        return list(self.baselines)

    def auc_curve(self, algorithm: str, classifier: str) -> list[float | None]:
        out = []
        for k in range(1, self.max_subset_size + 1):
            cell = self.cells[(algorithm, classifier, k)]
            out.append(cell.mean.auc if cell.mean is not None else None)
        return out


def model_config(plan: ExperimentPlan, classifier: str, fold: int):
    seed = derive_seed(plan.seed, "model", classifier, fold)
    base = plan.dff if classifier == "dff" else plan.rf
    return replace(base, seed=seed)


def _evaluate_columns(part: Partition, classifier: str, columns: tuple[int, ...], plan: ExperimentPlan) -> MetricsReport:
    train = part.train.columns(columns)
    test = part.test.columns(columns)
    model = fit(classifier, train, part.y_train, model_config(plan, classifier, part.index))
    if plan.measure_time:
        scores, per_sample = timed_predict(lambda X: predict(model, X), test)
    else:
        scores, per_sample = predict(model, test), 0.0
    report = evaluate(part.y_test, scores, plan.threshold)
    report.prediction_time_us = per_sample
    report.n_features = len(columns)
    report.classifier = classifier
    return report


def mean_report(reports: list[MetricsReport]) -> MetricsReport:
    out = replace(reports[0])
    for name in _AVERAGED:
        setattr(out, name, float(np.mean([getattr(r, name) for r in reports])))
    out.degenerate = tuple(sorted({flag for r in reports for flag in r.degenerate}))
    return out


def _run_jobs(fn: Callable, items: list, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


class _CellRunner:
    """Evaluates (classifier, columns) over all partitions, memoizing identical column sets."""

    def __init__(self, parts: list[Partition], plan: ExperimentPlan):
        self.parts = parts
        self.plan = plan
        self.cache: dict[tuple[str, int, tuple[int, ...]], MetricsReport | Exception] = {}

    def prefetch(self, requests: Iterable[tuple[str, list[tuple[int, ...]]]]) -> None:
        """Evaluate every (classifier, fold, columns) job not already cached, possibly in parallel."""
        pending: dict[tuple[str, int, tuple[int, ...]], None] = {}
        for classifier, per_fold_columns in requests:
            for part, cols in zip(self.parts, per_fold_columns):
                key = (classifier, part.index, cols)
                if key not in self.cache:
                    pending[key] = None
        todo = list(pending)

        def job(key):
            classifier, fold, cols = key
            try:
                return _evaluate_columns(self.parts[fold], classifier, cols, self.plan)
            except Exception as exc:  # a failed cell is recorded, not fatal
                return exc

        for key, result in zip(todo, _run_jobs(job, todo, self.plan.worker_count())):
            self.cache[key] = result

    def cell(self, classifier: str, per_fold_columns: list[tuple[int, ...]], names: list[str], selection: str) -> CellResult:
        self.prefetch([(classifier, per_fold_columns)])
        folds = []
        for part, cols in zip(self.parts, per_fold_columns):
            result = self.cache[(classifier, part.index, cols)]
            if isinstance(result, Exception):
                return CellResult(None, [], names, f"fold {part.index}: {type(result).__name__}: {result}")
            folds.append(replace(result, selection=selection))
        return CellResult(mean_report(folds), folds, names)


def _dataset_name(table: FeatureTable, plan: ExperimentPlan) -> str:
    if plan.dataset_name:
        return plan.dataset_name
    if plan.data:
        return Path(plan.data).stem
    return "dataset"


def sweep_subsets(
    table: FeatureTable,
    y: LabelVector,
    rankings: Rankings | None,
    plan: ExperimentPlan,
    parts: list[Partition] | None = None,
) -> SweepResult:
    """Evaluate the top-1 .. top-K feature subsets of every ranking with every classifier."""
    parts = parts if parts is not None else partitions(table, y, plan)
    if rankings is None:
        rankings = run_rankings(table, y, plan, parts)
    d = table.n_features
    for algo in plan.algorithms:
        if algo not in rankings.per_fold:
            raise ValueError(f"no ranking for algorithm {algo!r}")
        if len(rankings.per_fold[algo]) != len(parts):
            raise ValueError(f"{algo} has {len(rankings.per_fold[algo])} fold rankings for {len(parts)} partitions")
        if any(len(r.order) != d for r in rankings.per_fold[algo]):
            raise ValueError(f"{algo} ranking does not cover all {d} features")
    kmax = plan.subset_limit(d)
    runner = _CellRunner(parts, plan)
    full = tuple(range(d))

    requests = [(c, [full] * len(parts)) for c in plan.classifiers]
    for algo in plan.algorithms:
        for k in range(1, kmax + 1):
            cols = [tuple(r.top_k(k)) for r in rankings.per_fold[algo]]
            requests.extend((c, cols) for c in plan.classifiers)
    runner.prefetch(requests)

    baselines = {
        c: runner.cell(c, [full] * len(parts), list(table.feature_names), f"Full({d})") for c in plan.classifiers
    }
    cells = {}
    for algo in plan.algorithms:
        for k in range(1, kmax + 1):
            cols = [tuple(r.top_k(k)) for r in rankings.per_fold[algo]]
            names = [table.feature_names[i] for i in cols[0]]
            for c in plan.classifiers:
                cell = runner.cell(c, cols, names, f"{SHORT_NAMES[algo]}({k})")
                if cell.error:
                    log.warning("sweep cell %s/%s/k=%d failed: %s", algo, c, k, cell.error)
                cells[(algo, c, k)] = cell
    return SweepResult(
        dataset=_dataset_name(table, plan),
        feature_names=table.feature_names,
        max_subset_size=kmax,
        cells=cells,
        baselines=baselines,
        rankings=rankings,
        plan=plan,
        provenance=list(table.provenance),
    )


@dataclass
class AuditEntry:
    feature: str
    auc_single: float
    fold_aucs: list[float]
    flagged: bool


@dataclass
class AuditReport:
    dataset: str
    classifier: str
    delta: float
    min_full_auc: float
    auc_full: float
    entries: list[AuditEntry]

    @property
    def flagged(self) -> list[str]:
        return [e.feature for e in self.entries if e.flagged]


def audit_hidden_labels(
    table: FeatureTable,
    y: LabelVector,
    plan: ExperimentPlan,
    classifier: str | None = None,
    delta: float | None = None,
    parts: list[Partition] | None = None,
) -> AuditReport:
    """Flag features whose standalone AUC comes within ``delta`` of the all-feature AUC.

    Nothing is flagged when the all-feature model itself is near chance
    (mean AUC below ``plan.min_full_auc``): without signal, single-feature
    AUCs matching the full AUC say nothing about leakage.
    """
    classifier = classifier or plan.audit_classifier
    delta = plan.delta if delta is None else delta
    parts = parts if parts is not None else partitions(table, y, plan)
    runner = _CellRunner(parts, plan)
    d = table.n_features
    full = runner.cell(classifier, [tuple(range(d))] * len(parts), list(table.feature_names), f"Full({d})")
    if full.error:
        raise RuntimeError(f"full-feature audit model failed: {full.error}")
    runner.prefetch((classifier, [(j,)] * len(parts)) for j in range(d))
    auc_full = full.mean.auc
    informative = auc_full >= plan.min_full_auc
    entries = []
    for j, name in enumerate(table.feature_names):
        cell = runner.cell(classifier, [(j,)] * len(parts), [name], name)
        if cell.error:
            raise RuntimeError(f"single-feature model for {name!r} failed: {cell.error}")
        auc = cell.mean.auc
        entries.append(AuditEntry(name, auc, [r.auc for r in cell.folds], informative and auc >= auc_full - delta))
    entries.sort(key=lambda e: (-e.auc_single, e.feature))
    return AuditReport(_dataset_name(table, plan), classifier, delta, plan.min_full_auc, auc_full, entries)


def remove_and_rerun(
    table: FeatureTable, y: LabelVector, plan: ExperimentPlan, features_to_remove: Iterable[str]
) -> SweepResult:
    """Drop the named columns, then rank and sweep again."""
    names = list(features_to_remove)
    reduced = table.drop(names) if names else table
    new_plan = replace(plan, removed_features=tuple(dict.fromkeys((*plan.removed_features, *names))))
    parts = partitions(reduced, y, new_plan)
    result = sweep_subsets(reduced, y, run_rankings(reduced, y, new_plan, parts), new_plan, parts)
    if names:
        result.provenance.append(f"removed before rerun: {', '.join(names)}")
    return result
