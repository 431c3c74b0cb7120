"""Flow-record ingestion and preprocessing.

CSV rows are read as text, identifier columns (flow ids, timestamps, endpoint
addresses and ports) are dropped, categorical columns are label encoded and
the label is mapped to attack (1) / benign (0).  Normalization statistics and
the split/fold plans are separate steps so the harness can refit them inside
every training partition.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rng import generator

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed input data or a violated preprocessing precondition."""


class ColumnKind(str, enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    IDENTIFIER = "identifier"
    LABEL = "label"


# Aliases across UNSW-NB15, ToN-IoT, CSE-CIC-IDS2018 and their NetFlow variants.
# Multi-class attack-type columns are listed too: they restate the label.
DEFAULT_IDENTIFIER_NAMES = (
    "id",
    "flow id",
    "flow_id",
    "timestamp",
    "ts",
    "stime",
    "ltime",
    "srcip",
    "dstip",
    "sport",
    "dsport",
    "src ip",
    "dst ip",
    "src port",
    "dst port",
    "src_ip",
    "dst_ip",
    "src_port",
    "dst_port",
    "source ip",
    "destination ip",
    "source port",
    "destination port",
    "ipv4_src_addr",
    "ipv4_dst_addr",
    "l4_src_port",
    "l4_dst_port",
    "attack",
    "attack_cat",
    "type",
)
DEFAULT_LABEL_NAMES = ("label", "class")
DEFAULT_BENIGN_VALUES = ("0", "benign", "normal")


def _norm_name(name: str) -> str:
    return re.sub(r"[^0-9a-z]", "", name.strip().lower())


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: ColumnKind
    position: int


@dataclass(frozen=True)
class RawDataset:
    columns: tuple[ColumnSpec, ...]
    rows: tuple[tuple[str, ...], ...]
    source: str = ""

    @property
    def row_count(self) -> int:
        return len(self.rows)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def label_column(self) -> ColumnSpec:
        labels = [c for c in self.columns if c.kind == ColumnKind.LABEL]
        if len(labels) != 1:
            raise DataError(f"expected exactly one label column, found {len(labels)}")
        return labels[0]


@dataclass(frozen=True)
class Profile:
    """Per-dataset ingestion settings (label column, attack values, identifiers)."""

    label_column: str | None = None
    attack_values: frozenset[str] = frozenset()
    benign_values: frozenset[str] = frozenset(DEFAULT_BENIGN_VALUES)
    identifier_columns: tuple[str, ...] = DEFAULT_IDENTIFIER_NAMES
    delimiter: str = ","
    strict_labels: bool = False
    nan_policy: str = "zero"


def parse_key_value(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment line."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DataError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        out[key.strip().lower().replace("-", "_")] = value.strip()
    return out


def split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


_PROFILE_KEYS = {
    "label_column",
    "attack_values",
    "benign_values",
    "identifier_columns",
    "extra_identifier_columns",
    "delimiter",
    "strict_labels",
    "nan_policy",
}


def load_profile(path: str | Path) -> Profile:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"profile not found: {path}")
    kv = parse_key_value(path.read_text(encoding="utf-8"), str(path))
    unknown = set(kv) - _PROFILE_KEYS
    if unknown:
        raise DataError(f"{path}: unknown profile keys {sorted(unknown)}")
    prof = Profile()
    kwargs: dict = {}
    if "label_column" in kv:
        kwargs["label_column"] = kv["label_column"]
    if "attack_values" in kv:
        kwargs["attack_values"] = frozenset(split_list(kv["attack_values"]))
    if "benign_values" in kv:
        kwargs["benign_values"] = frozenset(split_list(kv["benign_values"]))
    idents = tuple(split_list(kv["identifier_columns"])) if "identifier_columns" in kv else prof.identifier_columns
    if "extra_identifier_columns" in kv:
        idents = idents + tuple(split_list(kv["extra_identifier_columns"]))
    kwargs["identifier_columns"] = idents
    if "delimiter" in kv:
        delim = kv["delimiter"]
        kwargs["delimiter"] = {"tab": "\t", "\\t": "\t", "comma": ",", "semicolon": ";"}.get(delim, delim)
    if "strict_labels" in kv:
        kwargs["strict_labels"] = kv["strict_labels"].lower() in ("1", "true", "yes", "on")
    if "nan_policy" in kv:
        kwargs["nan_policy"] = kv["nan_policy"]
    return replace(prof, **kwargs)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(
    path: str | Path,
    spec: Sequence[ColumnSpec] | str = "infer",
    *,
    delimiter: str = ",",
    identifier_names: Iterable[str] = DEFAULT_IDENTIFIER_NAMES,
    label_names: Iterable[str] | None = None,
) -> RawDataset:
    """Read a header-first CSV into a :class:`RawDataset`.

    With ``spec="infer"``, a column is numeric when every non-empty cell
    parses as a number and categorical otherwise; identifier and label
    columns are recognised by name (case, spaces and punctuation ignored).
    ``label_names`` defaults to ``("label", "class")``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, a header row is required") from None
        header = [h.strip() for h in header]
        width = len(header)
        rows = []
        for rowno, row in enumerate(reader, 1):
            if not row:
                continue
            if len(row) != width:
                raise DataError(
                    f"{path}: row {rowno} (line {reader.line_num}) has {len(row)} cells, expected {width}"
                )
            rows.append(tuple(c.strip() for c in row))

    if len(set(header)) != width:
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DataError(f"{path}: duplicate column names {dupes}")

    if isinstance(spec, str):
        if spec != "infer":
            raise ValueError(f"spec must be a list of ColumnSpec or 'infer', got {spec!r}")
        columns = _infer_columns(header, rows, identifier_names, label_names)
    else:
        columns = tuple(spec)
        by_pos = {c.position: c for c in columns}
        if len(by_pos) != width or sorted(by_pos) != list(range(width)):
            raise DataError(f"{path}: column spec covers {len(by_pos)} positions, header has {width}")
        for pos, name in enumerate(header):
            if by_pos[pos].name != name:
                raise DataError(
                    f"{path}: header column {pos} is {name!r}, spec expects {by_pos[pos].name!r}"
                )
        columns = tuple(by_pos[p] for p in range(width))

    raw = RawDataset(columns=columns, rows=tuple(rows), source=str(path))
    raw.label_column()
    return raw


def _infer_columns(header, rows, identifier_names, label_names) -> tuple[ColumnSpec, ...]:
    idents = {_norm_name(n) for n in identifier_names}
    labels = {_norm_name(n) for n in (label_names or DEFAULT_LABEL_NAMES)}
    cols = []
    for pos, name in enumerate(header):
        key = _norm_name(name)
        if key in labels:
            kind = ColumnKind.LABEL
        elif key in idents:
            kind = ColumnKind.IDENTIFIER
        elif all(r[pos] == "" or _is_number(r[pos]) for r in rows):
            kind = ColumnKind.NUMERIC
        else:
            kind = ColumnKind.CATEGORICAL
        cols.append(ColumnSpec(name, kind, pos))
    return tuple(cols)


def load_with_profile(path: str | Path, profile: Profile) -> RawDataset:
    label_names = (profile.label_column,) if profile.label_column else None
    return load_csv(
        path,
        "infer",
        delimiter=profile.delimiter,
        identifier_names=profile.identifier_columns,
        label_names=label_names,
    )


def drop_identifiers(raw: RawDataset) -> RawDataset:
    keep = [c for c in raw.columns if c.kind != ColumnKind.IDENTIFIER]
    if len(keep) == len(raw.columns):
        return raw
    if all(c.kind == ColumnKind.LABEL for c in keep):
        log.warning("%s: only the label column remains after dropping identifiers", raw.source)
    positions = [c.position for c in keep]
    columns = tuple(ColumnSpec(c.name, c.kind, i) for i, c in enumerate(keep))
    rows = tuple(tuple(r[p] for p in positions) for r in raw.rows)
    return RawDataset(columns=columns, rows=rows, source=raw.source)


@dataclass(frozen=True, eq=False)
class FeatureTable:
    values: np.ndarray
    feature_names: tuple[str, ...]
    provenance: tuple[str, ...] = ()
    # Source row of each table row; differs from arange(n) only after drop-row sanitizing.
    row_index: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-d, got shape {values.shape}")
        if values.shape[1] != len(self.feature_names):
            raise ValueError(
                f"{values.shape[1]} columns but {len(self.feature_names)} feature names"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if self.row_index is None:
            object.__setattr__(self, "row_index", np.arange(values.shape[0]))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def rows(self, idx) -> FeatureTable:
        idx = np.asarray(idx, dtype=np.intp)
        return FeatureTable(self.values[idx], self.feature_names, self.provenance, self.row_index[idx])

    def columns(self, idx) -> FeatureTable:
        idx = [int(i) for i in idx]
        return FeatureTable(
            self.values[:, idx],
            [self.feature_names[i] for i in idx],
            self.provenance,
            self.row_index,
        )

    def drop(self, names: Iterable[str]) -> FeatureTable:
        names = list(names)
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise DataError(f"unknown feature(s): {', '.join(missing)}")
        keep = [i for i, n in enumerate(self.feature_names) if n not in set(names)]
        out = self.columns(keep)
        return replace(out, provenance=out.provenance + (f"removed features: {', '.join(names)}",))

    def with_note(self, note: str) -> FeatureTable:
        return replace(self, provenance=self.provenance + (note,))


@dataclass(frozen=True, eq=False)
class LabelVector:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int8, copy=True).ravel()
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 (benign) or 1 (attack)")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def positive_count(self) -> int:
        return int(self.labels.sum())

    def __len__(self) -> int:
        return self.labels.shape[0]

    def take(self, idx) -> LabelVector:
        return LabelVector(self.labels[np.asarray(idx, dtype=np.intp)])


def encode(
    raw: RawDataset,
    attack_values: Iterable[str] = (),
    *,
    benign_values: Iterable[str] = DEFAULT_BENIGN_VALUES,
    strict: bool = False,
) -> tuple[FeatureTable, LabelVector]:
    """Turn a text dataset into a numeric :class:`FeatureTable` and binary labels.

    Categorical columns get codes ``0..v-1`` in sorted order of their distinct
    values.  A label is 1 when it is one of ``attack_values`` or parses as the
    number 1.  In strict mode any other label must be a benign value (or 0).
    """
    if any(c.kind == ColumnKind.IDENTIFIER for c in raw.columns):
        raise DataError("identifier columns must be dropped before encoding")
    label_col = raw.label_column()
    attack = {v.strip() for v in attack_values}
    benign = {v.strip().lower() for v in benign_values}

    feats = [c for c in raw.columns if c.kind != ColumnKind.LABEL]
    n = raw.row_count
    values = np.empty((n, len(feats)), dtype=np.float64)
    notes = []
    for j, col in enumerate(feats):
        cells = [r[col.position] for r in raw.rows]
        if col.kind == ColumnKind.NUMERIC:
            for i, cell in enumerate(cells):
                if cell == "":
                    values[i, j] = np.nan
                    continue
                try:
                    values[i, j] = float(cell)
                except ValueError:
                    raise DataError(
                        f"column {col.name!r}, row {i + 1}: cannot parse {cell!r} as a number"
                    ) from None
        else:
            codes = {v: k for k, v in enumerate(sorted(set(cells)))}
            values[:, j] = [codes[c] for c in cells]
            notes.append(f"label-encoded {col.name} ({len(codes)} values)")

    labels = np.zeros(n, dtype=np.int8)
    for i, r in enumerate(raw.rows):
        cell = r[label_col.position]
        if cell in attack or _as_float(cell) == 1.0:
            labels[i] = 1
        elif strict and cell.lower() not in benign and _as_float(cell) != 0.0:
            raise DataError(f"row {i + 1}: label {cell!r} is neither benign nor an attack value")
    table = FeatureTable(values, [c.name for c in feats], tuple(notes))
    return table, LabelVector(labels)


def _as_float(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def sanitize(table: FeatureTable, policy: str = "zero") -> FeatureTable:
    """Remove NaN/inf cells: ``zero`` replaces them with 0.0, ``drop-row`` drops the row.

    After ``drop-row`` use ``labels.take(table.row_index)`` to realign labels.
    """
    bad = ~np.isfinite(table.values)
    count = int(bad.sum())
    if count == 0:
        return table
    if policy == "zero":
        values = np.where(bad, 0.0, table.values)
        return FeatureTable(
            values,
            table.feature_names,
            table.provenance + (f"sanitize: replaced {count} non-finite cells with 0.0",),
            table.row_index,
        )
    if policy == "drop-row":
        keep = ~bad.any(axis=1)
        dropped = int((~keep).sum())
        out = table.rows(np.flatnonzero(keep))
        return out.with_note(f"sanitize: dropped {dropped} rows with {count} non-finite cells")
    raise ValueError(f"unknown sanitize policy {policy!r}")


@dataclass(frozen=True, eq=False)
class NormStats:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        if self.min.shape != self.max.shape or np.any(self.min > self.max):
            raise ValueError("NormStats requires min <= max elementwise")


def minmax_fit(table: FeatureTable) -> NormStats:
    if table.n_rows == 0:
        raise DataError("cannot fit normalization on an empty table")
    return NormStats(table.values.min(axis=0), table.values.max(axis=0))


def minmax_apply(table: FeatureTable, stats: NormStats) -> FeatureTable:
    """Scale to [0, 1]; constant columns become 0.0 and unseen values are clipped."""
    if stats.min.shape[0] != table.n_features:
        raise DataError(
            f"normalization stats have {stats.min.shape[0]} columns, table has {table.n_features}"
        )
    span = stats.max - stats.min
    safe = np.where(span > 0, span, 1.0)
    scaled = (table.values - stats.min) / safe
    scaled = np.where(span > 0, np.clip(scaled, 0.0, 1.0), 0.0)
    return FeatureTable(scaled, table.feature_names, table.provenance + ("minmax",), table.row_index)


def _class_indices(labels: LabelVector, minimum: int, what: str) -> list[np.ndarray]:
    out = []
    for cls in (0, 1):
        idx = np.flatnonzero(labels.labels == cls)
        if idx.size < minimum:
            raise DataError(f"{what}: class {cls} has {idx.size} samples, need at least {minimum}")
        out.append(idx)
    return out


@dataclass(frozen=True, eq=False)
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int
    ratio: float


def stratified_split(labels: LabelVector, ratio: float = 0.7, seed: int = 0) -> SplitPlan:
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    rng = generator(seed, "split")
    train, test = [], []
    for idx in _class_indices(labels, 2, "stratified_split"):
        shuffled = rng.permutation(idx)
        cut = math.floor(ratio * idx.size + 0.5)
        train.append(shuffled[:cut])
        test.append(shuffled[cut:])
    return SplitPlan(np.sort(np.concatenate(train)), np.sort(np.concatenate(test)), seed, ratio)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = self.assignments == fold
        return np.flatnonzero(~test), np.flatnonzero(test)


def stratified_kfold(labels: LabelVector, k: int = 5, seed: int = 0) -> FoldPlan:
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    rng = generator(seed, "folds")
    assignments = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for idx in _class_indices(labels, k, "stratified_kfold"):
        shuffled = rng.permutation(idx)
        # continuing the round-robin across classes keeps total fold sizes even too
        assignments[shuffled] = (np.arange(shuffled.size) + offset) % k
        offset = (offset + shuffled.size) % k
    return FoldPlan(k, assignments, seed)


def prepare(raw: RawDataset, profile: Profile) -> tuple[FeatureTable, LabelVector]:
    """Drop identifiers, encode and sanitize; normalization is left to the caller."""
    table, y = encode(
        drop_identifiers(raw),
        profile.attack_values,
        benign_values=profile.benign_values,
        strict=profile.strict_labels,
    )
    clean = sanitize(table, profile.nan_policy)
    if clean.n_rows != table.n_rows:
        y = y.take(clean.row_index)
        clean = replace(clean, row_index=np.arange(clean.n_rows))
    return clean, y
