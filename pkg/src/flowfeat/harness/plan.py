"""Experiment plan: what to rank, which classifiers, which protocol, where to write."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..dataset import DataError, parse_key_value, split_list
from ..model import CLASSIFIERS, DffConfig, RfConfig
from ..selection import ALGORITHMS

MODES = ("kfold", "holdout")


@dataclass(frozen=True)
class ExperimentPlan:
    data: str | None = None
    profile: str | None = None
    dataset_name: str | None = None
    algorithms: tuple[str, ...] = ALGORITHMS
    classifiers: tuple[str, ...] = CLASSIFIERS
    max_subset_size: int | None = None
    mode: str = "kfold"
    k: int = 5
    ratio: float = 0.7
    seed: int = 0
    removed_features: tuple[str, ...] = ()
    out: str = "out"
    delta: float = 0.02
    min_full_auc: float = 0.55
    audit_classifier: str = "rf"
    ig_bins: int = 10
    chi_binned: bool = False
    threshold: float = 0.5
    measure_time: bool = True
    jobs: int = 0  # 0: one per available core
    dff: DffConfig = field(default_factory=DffConfig)
    rf: RfConfig = field(default_factory=RfConfig)

    def __post_init__(self):
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"algorithms must be a nonempty subset of {ALGORITHMS}, got {list(self.algorithms)}")
        bad = [c for c in self.classifiers if c not in CLASSIFIERS]
        if bad or not self.classifiers:
            raise ValueError(f"classifiers must be a nonempty subset of {CLASSIFIERS}, got {list(self.classifiers)}")
        if self.audit_classifier not in CLASSIFIERS:
            raise ValueError(f"audit_classifier must be one of {CLASSIFIERS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"ratio must be in (0, 1), got {self.ratio}")
        if self.max_subset_size is not None and self.max_subset_size < 1:
            raise ValueError("max_subset_size must be at least 1")
        if self.jobs < 0:
            raise ValueError("jobs must be >= 0")

    def subset_limit(self, d: int) -> int:
        """Largest subset size swept: the plan's value capped at d, else min(15, d)."""
        if self.max_subset_size is None:
            return min(15, d)
        return min(self.max_subset_size, d)

    def worker_count(self) -> int:
        return self.jobs or os.cpu_count() or 1

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("algorithms", "classifiers", "removed_features"):
            out[key] = list(out[key])
        return out


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


# plan-file key -> (field, parser)
_KEYS = {
    "data": ("data", str),
    "dataset": ("data", str),
    "profile": ("profile", str),
    "dataset_name": ("dataset_name", str),
    "algorithms": ("algorithms", lambda v: tuple(split_list(v))),
    "classifiers": ("classifiers", lambda v: tuple(split_list(v))),
    "max_k": ("max_subset_size", int),
    "max_subset": ("max_subset_size", int),
    "max_subset_size": ("max_subset_size", int),
    "mode": ("mode", str),
    "k": ("k", int),
    "ratio": ("ratio", float),
    "seed": ("seed", int),
    "removed_features": ("removed_features", lambda v: tuple(split_list(v))),
    "remove": ("removed_features", lambda v: tuple(split_list(v))),
    "out": ("out", str),
    "output": ("out", str),
    "output_dir": ("out", str),
    "delta": ("delta", float),
    "min_full_auc": ("min_full_auc", float),
    "audit_classifier": ("audit_classifier", str),
    "ig_bins": ("ig_bins", int),
    "chi_binned": ("chi_binned", _bool),
    "threshold": ("threshold", float),
    "measure_time": ("measure_time", _bool),
    "jobs": ("jobs", int),
}
_DFF_KEYS = {f"dff_{f.name}": f for f in fields(DffConfig) if f.name != "seed"}
_RF_KEYS = {f"rf_{f.name}": f for f in fields(RfConfig) if f.name != "seed"}


def _parse_config_value(f, value: str):
    if f.type in ("bool",):
        return _bool(value)
    if "int" in str(f.type):
        return None if value.lower() in ("none", "") else int(value)
    return float(value)


def plan_from_mapping(kv: dict[str, str], base: ExperimentPlan | None = None, source: str = "plan") -> ExperimentPlan:
    """Apply string-valued settings on top of ``base`` (defaults when None)."""
    plan = base or ExperimentPlan()
    updates: dict = {}
    dff: dict = {}
    rf: dict = {}
    for key, value in kv.items():
        try:
            if key in _KEYS:
                name, parse = _KEYS[key]
                updates[name] = parse(value)
            elif key in _DFF_KEYS:
                dff[_DFF_KEYS[key].name] = _parse_config_value(_DFF_KEYS[key], value)
            elif key in _RF_KEYS:
                rf[_RF_KEYS[key].name] = _parse_config_value(_RF_KEYS[key], value)
            else:
                raise DataError(f"{source}: unknown plan key {key!r}")
        except ValueError as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"{source}: bad value for {key!r}: {exc}") from None
    if dff:
        updates["dff"] = replace(plan.dff, **dff)
    if rf:
        updates["rf"] = replace(plan.rf, **rf)
    try:
        return replace(plan, **updates)
    except ValueError as exc:
        raise DataError(f"{source}: {exc}") from None


def load_plan(path: str | Path) -> ExperimentPlan:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"plan not found: {path}")
    plan = plan_from_mapping(parse_key_value(path.read_text(encoding="utf-8"), str(path)), source=str(path))
    # relative dataset/profile paths are resolved against the plan's directory
    updates = {}
    for name in ("data", "profile"):
        value = getattr(plan, name)
        if value and not Path(value).is_absolute():
            updates[name] = str(path.parent / value)
    return replace(plan, **updates)
