"""Deep feed-forward binary classifier in plain numpy.

Three ReLU hidden layers of ten units, inverted dropout after every hidden
activation, a single sigmoid output, binary cross-entropy and Adam.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..dataset import FeatureTable, LabelVector
from ..rng import generator


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class DffConfig:
    hidden_layers: int = 3
    hidden_width: int = 10
    dropout_rate: float = 0.2
    dropout_on_input: bool = False
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 10
    batch_size: int = 256
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.hidden_layers < 1 or self.hidden_width < 1:
            raise ValueError("need at least one hidden layer of width >= 1")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class DffModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    config: DffConfig = field(default_factory=DffConfig)
    epochs_run: int = 0

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    def parameters(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "epochs_run": self.epochs_run,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> DffModel:
        weights = [np.asarray(w, dtype=np.float64) for w in doc["weights"]]
        biases = [np.asarray(b, dtype=np.float64) for b in doc["biases"]]
        return cls(weights, biases, DffConfig(**doc["config"]), doc["epochs_run"])


def layer_sizes(n_inputs: int, cfg: DffConfig) -> list[int]:
    return [n_inputs] + [cfg.hidden_width] * cfg.hidden_layers + [1]


def init_model(n_inputs: int, cfg: DffConfig) -> DffModel:
    """Glorot-uniform weights, zero biases."""
    rng = generator(cfg.seed, "dff", "init")
    sizes = layer_sizes(n_inputs, cfg)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DffModel(weights, biases, cfg)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_per_sample(logits: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.maximum(logits, 0.0) - logits * y + np.log1p(np.exp(-np.abs(logits)))


def _affine(h: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # an explicit sum over inputs keeps every row's result independent of the
    # other rows and of BLAS blocking, so scores do not depend on batch layout
    z = np.repeat(b[None, :], h.shape[0], axis=0)
    for i in range(w.shape[0]):
        z += h[:, i, None] * w[i]
    return z


def _forward(model: DffModel, X: np.ndarray, masks=None):
    """Return the output logits and the per-layer cache needed by backprop.

    ``masks`` holds one already-scaled dropout mask per dropout site (input
    first when enabled), or None for inference.
    """
    acts = []
    h = X
    site = 0
    if masks is not None and model.config.dropout_on_input:
        h = h * masks[0]
        site = 1
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = _affine(h, w, b)
        if i == last:
            acts.append((h, None, None))
            return z[:, 0], acts
        a = np.maximum(z, 0.0)
        mask = None
        if masks is not None:
            mask = masks[site]
            site += 1
            a = a * mask
        acts.append((h, z, mask))
        h = a
    raise AssertionError("unreachable")


def _backward(model: DffModel, acts, dlogits: np.ndarray):
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.weights)
    delta = dlogits[:, None]
    for i in range(len(model.weights) - 1, -1, -1):
        h_in = acts[i][0]
        grads_w[i] = h_in.T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i == 0:
            break
        delta = delta @ model.weights[i].T
        _, z_prev, mask_prev = acts[i - 1]
        if mask_prev is not None:
            delta = delta * mask_prev
        delta = delta * (z_prev > 0)
    return grads_w, grads_b


def loss_and_grads(model: DffModel, X: np.ndarray, y: np.ndarray, masks=None):
    """Mean binary cross-entropy over the batch and its parameter gradients."""
    logits, acts = _forward(model, X, masks)
    loss = float(_bce_per_sample(logits, y).mean())
    dlogits = (_sigmoid(logits) - y) / y.shape[0]
    gw, gb = _backward(model, acts, dlogits)
    return loss, gw, gb


def _dropout_masks(model: DffModel, batch: int, rng: np.random.Generator) -> list[np.ndarray]:
    cfg = model.config
    keep = 1.0 - cfg.dropout_rate
    widths = [w.shape[1] for w in model.weights[:-1]]
    if cfg.dropout_on_input:
        widths = [model.n_inputs] + widths
    return [(rng.random((batch, w)) < keep) / keep for w in widths]


def _check_binary(y: np.ndarray) -> None:
    if y.size == 0 or y.min() == y.max():
        raise ValueError("training needs both classes present")


def train_dff(X: FeatureTable, y: LabelVector, cfg: DffConfig = DffConfig()) -> DffModel:
    """Mini-batch Adam training; deterministic for a given ``cfg.seed``."""
    values = X.values
    labels = y.labels.astype(np.float64)
    if values.shape[0] != labels.shape[0]:
        raise ValueError("feature and label row counts differ")
    _check_binary(labels)
    model = init_model(values.shape[1], cfg)
    rng = generator(cfg.seed, "dff", "train")
    params = model.parameters()
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    step = 0
    n = values.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            masks = _dropout_masks(model, batch.size, rng) if cfg.dropout_rate > 0 else None
            # divergence is reported below, not through numpy warnings
            with np.errstate(over="ignore", invalid="ignore"):
                loss, gw, gb = loss_and_grads(model, values[batch], labels[batch], masks)
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite loss in epoch {epoch + 1}")
            step += 1
            grads = [g for pair in zip(gw, gb) for g in pair]
            c1 = 1.0 - cfg.beta1**step
            c2 = 1.0 - cfg.beta2**step
            for p, g, mi, vi in zip(params, grads, m, v):
                mi *= cfg.beta1
                mi += (1.0 - cfg.beta1) * g
                vi *= cfg.beta2
                vi += (1.0 - cfg.beta2) * g * g
                p -= cfg.learning_rate * (mi / c1) / (np.sqrt(vi / c2) + cfg.epsilon)
        model.epochs_run = epoch + 1
    if not all(np.isfinite(p).all() for p in params):
        raise TrainingError(f"non-finite parameters after epoch {model.epochs_run}")
    return model


def predict_dff(model: DffModel, X: FeatureTable) -> np.ndarray:
    values = X.values
    if values.shape[1] != model.n_inputs:
        raise ValueError(f"model expects {model.n_inputs} features, got {values.shape[1]}")
    logits, _ = _forward(model, values)
    return _sigmoid(logits)


def _exact_loss(model: DffModel, X: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Mean loss plus the ReLU on/off pattern of every hidden unit."""
    logits, acts = _forward(model, X)
    pattern = [z > 0 for _, z, _ in acts if z is not None]
    # fsum makes the batch mean independent of summation order
    return math.fsum(_bce_per_sample(logits, y)) / y.shape[0], pattern


def _same_pattern(a: list[np.ndarray], b: list[np.ndarray]) -> bool:
    return all(np.array_equal(p, q) for p, q in zip(a, b))


def gradient_check(model: DffModel, X, y, epsilon: float = 1e-5) -> float:
    """Max relative error between backprop gradients and central differences.

    Dropout is disabled.  The relative error of one parameter is
    ``|ga - gn| / max(1e-8, |ga| + |gn|)``.  When a step of ``epsilon`` would
    move some hidden unit across the ReLU kink, the central difference would
    average two different slopes, so the step is halved (up to 20 times)
    until the activation pattern stays fixed.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    X = X.values if isinstance(X, FeatureTable) else np.asarray(X, dtype=np.float64)
    y = (y.labels if isinstance(y, LabelVector) else np.asarray(y)).astype(np.float64)
    _, gw, gb = loss_and_grads(model, X, y)
    _, base = _exact_loss(model, X, y)
    analytic = [g for pair in zip(gw, gb) for g in pair]
    worst = 0.0
    for p, ga in zip(model.parameters(), analytic):
        flat = p.reshape(-1)
        ga = ga.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            step = epsilon
            for _ in range(21):
                flat[i] = orig + step
                up, pat_up = _exact_loss(model, X, y)
                flat[i] = orig - step
                down, pat_down = _exact_loss(model, X, y)
                flat[i] = orig
                if _same_pattern(base, pat_up) and _same_pattern(base, pat_down):
                    break
                step /= 2.0
            gn = (up - down) / (2.0 * step)
            err = abs(ga[i] - gn) / max(1e-8, abs(ga[i]) + abs(gn))
            worst = max(worst, err)
    return worst
