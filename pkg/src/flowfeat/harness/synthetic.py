"""Desk-scale synthetic flows with an optional planted "hidden label" column."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dataset import FeatureTable, LabelVector
from ..rng import generator

LEAK_NAME = "leak"


@dataclass(frozen=True)
class SyntheticSpec:
    """``d`` counts every feature column; with a leak, one of them is the leak."""

    n: int = 2000
    d: int = 10
    leak_strength: float = 1.0
    positive_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 10:
            raise ValueError(f"n must be at least 10, got {self.n}")
        if self.d < 1:
            raise ValueError(f"d must be at least 1, got {self.d}")
        if not 0.0 <= self.leak_strength <= 1.0:
            raise ValueError(f"leak_strength must be in [0, 1], got {self.leak_strength}")
        if not 0.0 < self.positive_fraction < 1.0:
            raise ValueError(f"positive_fraction must be in (0, 1), got {self.positive_fraction}")

    @property
    def has_leak(self) -> bool:
        return self.leak_strength > 0


def generate_synthetic(spec: SyntheticSpec) -> tuple[FeatureTable, LabelVector]:
    """Uniform-noise features plus, when ``leak_strength > 0``, one leak column.

    The leak is the label with each entry flipped with probability
    ``(1 - leak_strength) / 2``: an exact copy at strength 1, independent of
    the label at strength 0.  Its position among the columns is seeded.
    """
    rng = generator(spec.seed, "synthetic")
    n_pos = min(spec.n - 1, max(1, round(spec.positive_fraction * spec.n)))
    labels = np.zeros(spec.n, dtype=np.int8)
    labels[:n_pos] = 1
    labels = rng.permutation(labels)

    n_noise = spec.d - 1 if spec.has_leak else spec.d
    values = rng.random((spec.n, n_noise))
    names = [f"noise_{i}" for i in range(n_noise)]
    notes = [f"synthetic n={spec.n} d={spec.d} leak_strength={spec.leak_strength} seed={spec.seed}"]
    if spec.has_leak:
        flips = rng.random(spec.n) < (1.0 - spec.leak_strength) / 2.0
        leak = (labels ^ flips).astype(np.float64)
        span = leak.max() - leak.min()
        leak = (leak - leak.min()) / span if span > 0 else np.zeros_like(leak)
        pos = int(rng.integers(0, spec.d))
        values = np.insert(values, pos, leak, axis=1)
        names.insert(pos, LEAK_NAME)
        notes.append(f"leak column at position {pos}")
    return FeatureTable(values, names, tuple(notes)), LabelVector(labels)


def write_csv(table: FeatureTable, y: LabelVector, path: str | Path, label_name: str = "Label") -> None:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*table.feature_names, label_name])
        for row, label in zip(table.values, y.labels):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
