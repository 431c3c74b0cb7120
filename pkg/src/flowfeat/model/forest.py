"""Random forest of Gini-impurity decision trees.

Tree growth runs in a numba kernel.  Each tree gets its own bootstrap sample
and its own per-node feature-sampling stream, both derived from the forest
seed and the tree index, so trees can be grown in any order or in parallel
and still give the same forest.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from ..dataset import FeatureTable, LabelVector
from ..rng import derive_seed, generator

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class RfConfig:
    n_trees: int = 50
    max_features: int | None = None  # None: floor(sqrt(d)), at least 1
    bootstrap: bool = True
    max_depth: int | None = None
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")

    def features_per_split(self, d: int) -> int:
        if self.max_features is not None:
            return max(1, min(d, self.max_features))
        return max(1, math.isqrt(d))


@dataclass
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # positive-class fraction at the node

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, doc: dict) -> Tree:
        return cls(
            np.asarray(doc["feature"], dtype=np.int64),
            np.asarray(doc["threshold"], dtype=np.float64),
            np.asarray(doc["left"], dtype=np.int64),
            np.asarray(doc["right"], dtype=np.int64),
            np.asarray(doc["value"], dtype=np.float64),
        )


@dataclass
class RfModel:
    trees: list[Tree]
    n_features: int
    config: RfConfig = field(default_factory=RfConfig)

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> RfModel:
        return cls([Tree.from_dict(t) for t in doc["trees"]], doc["n_features"], RfConfig(**doc["config"]))


@numba.njit(cache=True)
def _splitmix(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _randbelow(state, k):
    # 53 random bits scaled to [0, k)
    u = (_splitmix(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    return min(int(u * k), k - 1)


@numba.njit(cache=True, nogil=True)
def _grow(X, y, samples, n_sub, min_leaf, max_depth, seed):
    n = samples.shape[0]
    d = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)

    state = np.empty(1, dtype=np.uint64)
    state[0] = seed
    idx = samples.copy()
    buf = np.empty(n, dtype=np.int64)
    vals = np.empty(n, dtype=np.float64)
    labs = np.empty(n, dtype=np.float64)
    perm = np.arange(d)

    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_depth[0] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        count = hi - lo
        pos = 0.0
        for i in range(lo, hi):
            pos += y[idx[i]]
        value[node] = pos / count
        if pos == 0.0 or pos == count or count < 2 * min_leaf:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        # partial Fisher-Yates: first n_sub entries of perm are the sampled features
        for i in range(d):
            perm[i] = i
        for i in range(n_sub):
            j = i + _randbelow(state, d - i)
            t = perm[i]
            perm[i] = perm[j]
            perm[j] = t
        chosen = np.sort(perm[:n_sub])

        parent = count - (pos * pos + (count - pos) * (count - pos)) / count
        best_gain = 0.0
        best_f = -1
        best_thr = 0.0
        for f in chosen:
            for i in range(count):
                vals[i] = X[idx[lo + i], f]
            order = np.argsort(vals[:count], kind="mergesort")
            for i in range(count):
                labs[i] = y[idx[lo + order[i]]]
            lpos = 0.0
            for i in range(count - 1):
                lpos += labs[i]
                nl = i + 1
                nr = count - nl
                a = vals[order[i]]
                b = vals[order[i + 1]]
                if a == b or nl < min_leaf or nr < min_leaf:
                    continue
                rpos = pos - lpos
                child = (nl - (lpos * lpos + (nl - lpos) * (nl - lpos)) / nl) + (
                    nr - (rpos * rpos + (nr - rpos) * (nr - rpos)) / nr
                )
                gain = parent - child
                # tolerance keeps float noise from breaking the lowest-feature, lowest-threshold tie rule
                if gain > best_gain + 1e-12 * count:
                    best_gain = gain
                    best_f = f
                    mid = 0.5 * (a + b)
                    best_thr = mid if mid < b else a
        if best_f < 0:
            continue

        nleft = 0
        for i in range(lo, hi):
            if X[idx[i], best_f] <= best_thr:
                buf[nleft] = idx[i]
                nleft += 1
        k = nleft
        for i in range(lo, hi):
            if X[idx[i], best_f] > best_thr:
                buf[k] = idx[i]
                k += 1
        for i in range(count):
            idx[lo + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_thr
        lchild = n_nodes
        rchild = n_nodes + 1
        n_nodes += 2
        left[node] = lchild
        right[node] = rchild
        # right pushed first so the left subtree is grown first
        stack_node[top] = rchild
        stack_lo[top] = lo + nleft
        stack_hi[top] = hi
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = lchild
        stack_lo[top] = lo
        stack_hi[top] = lo + nleft
        stack_depth[top] = depth + 1
        top += 1

    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]


@numba.njit(cache=True, nogil=True)
def _predict_tree(X, feature, threshold, left, right, value, out):
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] += value[node]


def _check_training_input(values: np.ndarray, labels: np.ndarray) -> None:
    if values.shape[0] == 0 or values.shape[1] == 0:
        raise ValueError("cannot train on an empty table")
    if values.shape[0] != labels.shape[0]:
        raise ValueError("feature and label row counts differ")
    if values.shape[0] < 2 or labels.min() == labels.max():
        raise ValueError("training needs both classes present")


def grow_tree(values: np.ndarray, labels: np.ndarray, cfg: RfConfig, tree_index: int) -> Tree:
    n, d = values.shape
    if cfg.bootstrap:
        samples = generator(cfg.seed, "rf", "bootstrap", tree_index).integers(0, n, size=n)
    else:
        samples = np.arange(n)
    node_seed = np.uint64(derive_seed(cfg.seed, "rf", "nodes", tree_index))
    max_depth = -1 if cfg.max_depth is None else cfg.max_depth
    arrays = _grow(
        values, labels, samples.astype(np.int64), cfg.features_per_split(d), cfg.min_samples_leaf, max_depth, node_seed
    )
    return Tree(*arrays)


def train_rf(X: FeatureTable, y: LabelVector, cfg: RfConfig = RfConfig(), jobs: int = 1) -> RfModel:
    """Fit ``cfg.n_trees`` bootstrapped trees; ``jobs`` only changes speed, never the result."""
    values = np.ascontiguousarray(X.values)
    labels = y.labels.astype(np.float64)
    _check_training_input(values, labels)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trees = list(pool.map(lambda t: grow_tree(values, labels, cfg, t), range(cfg.n_trees)))
    else:
        trees = [grow_tree(values, labels, cfg, t) for t in range(cfg.n_trees)]
    return RfModel(trees, values.shape[1], cfg)


def predict_rf(model: RfModel, X: FeatureTable) -> np.ndarray:
    """Mean of per-tree leaf positive fractions."""
    values = np.ascontiguousarray(X.values)
    if values.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {values.shape[1]}")
    total = np.zeros(values.shape[0])
    for t in model.trees:
        _predict_tree(values, t.feature, t.threshold, t.left, t.right, t.value, total)
    return np.clip(total / len(model.trees), 0.0, 1.0)
