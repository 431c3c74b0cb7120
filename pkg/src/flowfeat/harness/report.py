"""Writers for rankings, sweep tables, AUC curves, audit tables and the run manifest.

All writers emit deterministic text (fixed column order, ``repr`` floats, no
timestamps) so two runs of the same plan produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numba
import numpy as np
import scipy

from .. import __version__
from ..metrics import METRIC_COLUMNS, MetricsReport
from ..rng import derive_seed
from ..selection import RANKING_COLUMNS, write_ranking_csv
from .experiment import AuditReport, CellResult, Rankings, SweepResult
from .plan import ExperimentPlan

FORMATS = ("csv", "json", "curves")


def _num(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def _metric_row(dataset: str, classifier: str, selection: str, m: MetricsReport | None) -> list[str]:
    if m is None:
        return [dataset, classifier, selection] + [""] * 6
    return [
        dataset,
        classifier,
        selection,
        _num(m.accuracy),
        _num(m.auc),
        _num(m.f1),
        _num(m.dr),
        _num(m.far),
        _num(m.prediction_time_us),
    ]


def _writer(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = path.open("w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_rankings(rankings: Rankings, out_dir: str | Path) -> list[Path]:
    """rankings/<algo>.csv from the first training partition, plus every fold in <algo>_folds.csv."""
    out_dir = Path(out_dir) / "rankings"
    paths = []
    for algo, per_fold in rankings.per_fold.items():
        path = out_dir / f"{algo}.csv"
        write_ranking_csv(per_fold[0], path)
        paths.append(path)
        path = out_dir / f"{algo}_folds.csv"
        fh, w = _writer(path)
        with fh:
            w.writerow(("fold", *RANKING_COLUMNS))
            for fold, ranking in enumerate(per_fold):
                for rank, idx in enumerate(ranking.order, 1):
                    s = ranking.scores[idx]
                    w.writerow([fold, rank, s.feature_name, algo, repr(s.score)])
        paths.append(path)
    return paths


def _cell_json(cell: CellResult) -> dict:
    return {
        "features": cell.features,
        "error": cell.error,
        "mean": cell.mean.to_dict() if cell.mean is not None else None,
        "folds": [r.to_dict() for r in cell.folds],
    }


def _sweep_csv(result: SweepResult, out_dir: Path) -> list[Path]:
    paths = []
    for classifier in result.classifiers:
        base = result.baselines[classifier]
        for algo in result.algorithms:
            path = out_dir / "sweep" / f"{classifier}_{algo}.csv"
            fh, w = _writer(path)
            with fh:
                w.writerow(METRIC_COLUMNS)
                w.writerow(_metric_row(result.dataset, classifier, base.mean.selection if base.mean else f"Full({len(result.feature_names)})", base.mean))
                for k in range(1, result.max_subset_size + 1):
                    cell = result.cells[(algo, classifier, k)]
                    selection = cell.mean.selection if cell.mean else f"{algo}({k})"
                    w.writerow(_metric_row(result.dataset, classifier, selection, cell.mean))
            paths.append(path)
    return paths


def _sweep_json(result: SweepResult, out_dir: Path) -> list[Path]:
    doc = {
        "dataset": result.dataset,
        "features": list(result.feature_names),
        "max_subset_size": result.max_subset_size,
        "provenance": result.provenance,
        "baselines": {c: _cell_json(cell) for c, cell in result.baselines.items()},
        "cells": [
            {"algorithm": a, "classifier": c, "k": k, **_cell_json(cell)}
            for (a, c, k), cell in result.cells.items()
        ],
    }
    path = out_dir / "sweep.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return [path]


def _sweep_curves(result: SweepResult, out_dir: Path) -> list[Path]:
    """Per classifier: one AUC series per algorithm over k, plus a constant full-set series."""
    paths = []
    for classifier in result.classifiers:
        base = result.baselines[classifier].mean
        path = out_dir / "curves" / f"{classifier}.tsv"
        path.parent.mkdir(parents=True, exist_ok=True)
        curves = {a: result.auc_curve(a, classifier) for a in result.algorithms}
        lines = ["\t".join(["subset_size", "full", *result.algorithms])]
        for i in range(result.max_subset_size):
            row = [str(i + 1), _num(base.auc if base else None)] + [_num(curves[a][i]) for a in result.algorithms]
            lines.append("\t".join(row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def _audit_csv(report: AuditReport, out_dir: Path) -> list[Path]:
    path = out_dir / "audit.csv"
    fh, w = _writer(path)
    with fh:
        w.writerow(("feature", "auc_single", "auc_full", "delta", "flagged"))
        for e in report.entries:
            w.writerow([e.feature, _num(e.auc_single), _num(report.auc_full), _num(report.delta), int(e.flagged)])
    return [path]


def _audit_json(report: AuditReport, out_dir: Path) -> list[Path]:
    doc = {
        "dataset": report.dataset,
        "classifier": report.classifier,
        "delta": report.delta,
        "min_full_auc": report.min_full_auc,
        "auc_full": report.auc_full,
        "flagged": report.flagged,
        "features": [
            {"feature": e.feature, "auc_single": e.auc_single, "fold_aucs": e.fold_aucs, "flagged": e.flagged}
            for e in report.entries
        ],
    }
    path = out_dir / "audit.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return [path]


def emit_report(result: SweepResult | AuditReport, fmt: str, out_dir: str | Path) -> list[Path]:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    out_dir = Path(out_dir)
    if isinstance(result, SweepResult):
        if not result.cells and not result.baselines:
            raise ValueError("empty sweep result")
        return {"csv": _sweep_csv, "json": _sweep_json, "curves": _sweep_curves}[fmt](result, out_dir)
    if isinstance(result, AuditReport):
        if not result.entries:
            raise ValueError("empty audit report")
        if fmt == "curves":
            raise ValueError("curves are only defined for sweep results")
        return {"csv": _audit_csv, "json": _audit_json}[fmt](result, out_dir)
    raise TypeError(f"cannot report a {type(result).__name__}")


def write_manifest(plan: ExperimentPlan, out_dir: str | Path, n_partitions: int, **extra) -> Path:
    """run_manifest.json: the resolved plan, every derived seed and library versions."""
    seeds = {
        "plan": plan.seed,
        "models": {
            c: [derive_seed(plan.seed, "model", c, f) for f in range(n_partitions)] for c in ("dff", "rf")
        },
    }
    doc = {
        "plan": plan.to_dict(),
        "seeds": seeds,
        "versions": {
            "flowfeat": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
        **extra,
    }
    path = Path(out_dir) / "run_manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
