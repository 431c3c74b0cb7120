"""Binary attack classifiers and their JSON serialization."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..dataset import FeatureTable, LabelVector
from .dff import DffConfig, DffModel, TrainingError, gradient_check, predict_dff, train_dff
from .forest import RfConfig, RfModel, predict_rf, train_rf

CLASSIFIERS = ("dff", "rf")
FORMAT = "flowfeat-model"
FORMAT_VERSION = 1

__all__ = [
    "CLASSIFIERS",
    "DffConfig",
    "DffModel",
    "RfConfig",
    "RfModel",
    "TrainingError",
    "fit",
    "gradient_check",
    "load_model",
    "predict",
    "predict_dff",
    "predict_rf",
    "save_model",
    "train_dff",
    "train_rf",
]


def fit(kind: str, X: FeatureTable, y: LabelVector, config, jobs: int = 1):
    if kind == "dff":
        return train_dff(X, y, config)
    if kind == "rf":
        return train_rf(X, y, config, jobs=jobs)
    raise ValueError(f"unknown classifier {kind!r}; expected one of {CLASSIFIERS}")


def predict(model, X: FeatureTable) -> np.ndarray:
    if isinstance(model, DffModel):
        return predict_dff(model, X)
    if isinstance(model, RfModel):
        return predict_rf(model, X)
    raise TypeError(f"not a classifier model: {type(model).__name__}")


def model_to_json(model) -> str:
    kind = "dff" if isinstance(model, DffModel) else "rf"
    doc = {"format": FORMAT, "version": FORMAT_VERSION, "kind": kind, "model": model.to_dict()}
    return json.dumps(doc)


def model_from_json(text: str):
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValueError("not a flowfeat model document")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    if doc["kind"] == "dff":
        return DffModel.from_dict(doc["model"])
    if doc["kind"] == "rf":
        return RfModel.from_dict(doc["model"])
    raise ValueError(f"unknown model kind {doc['kind']!r}")


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: str | Path):
    return model_from_json(Path(path).read_text(encoding="utf-8"))
