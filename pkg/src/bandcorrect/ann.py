"""One-hidden-layer softmax classifier: tanh hidden units, cross-entropy loss.

Labels are the 1-based class numbers used throughout the package
(1..4 = 100%/75%/50%/25% attenuation, 5 = unattenuated, 6 = not in this band).
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

N_CLASSES = 6
CLASS_LABELS = ("100%", "75%", "50%", "25%", "0%", "NB")
DEFAULT_HIDDEN_SIZES = (5, 10, 15, 20, 25, 30, 35, 40)


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch, loss):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    momentum: float = 0.9
    validation_fraction: float = 0.2
    patience: int = 20
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 < self.validation_fraction < 0.5:
            raise ValueError(f"validation_fraction must lie in (0, 0.5), got {self.validation_fraction}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")

    def to_dict(self):
        return asdict(self)


def softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def one_hot(labels, n_classes=N_CLASSES):
    labels = np.asarray(labels, dtype=int)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels - 1] = 1.0
    return out


def init_params(n_inputs, hidden_size, n_outputs, rng):
    """Glorot-uniform weights, zero biases."""
    def glorot(fan_out, fan_in):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=(fan_out, fan_in))

    return {
        "w1": glorot(hidden_size, n_inputs),
        "b1": np.zeros(hidden_size),
        "w2": glorot(n_outputs, hidden_size),
        "b2": np.zeros(n_outputs),
    }


def forward_batch(params, x):
    """Hidden activations and class probabilities for rows of ``x``."""
    h = np.tanh(x @ params["w1"].T + params["b1"])
    p = softmax(h @ params["w2"].T + params["b2"])
    return h, p


def loss_and_grads(params, x, targets):
    """Mean cross-entropy over the batch and its gradients by back-propagation."""
    h, p = forward_batch(params, x)
    n = x.shape[0]
    loss = -np.sum(targets * np.log(np.clip(p, 1e-300, None))) / n
    delta_out = (p - targets) / n
    delta_hidden = (delta_out @ params["w2"]) * (1.0 - h * h)
    grads = {
        "w2": delta_out.T @ h,
        "b2": delta_out.sum(axis=0),
        "w1": delta_hidden.T @ x,
        "b1": delta_hidden.sum(axis=0),
    }
    return loss, grads


def cross_entropy(probabilities, true_class) -> float:
    """``-log p[true_class]`` with 1-based ``true_class``; a 2-D input gives the dataset mean."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim == 1:
        return float(-np.log(p[int(true_class) - 1]))
    idx = np.asarray(true_class, dtype=int) - 1
    return float(-np.mean(np.log(p[np.arange(p.shape[0]), idx])))


@dataclass
class BandClassifier:
    band_index: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    seed: int = 0
    validation_loss: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def hidden_size(self) -> int:
        return self.w1.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.w2.shape[0]

    @property
    def params(self):
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def standardize(self, x):
        return (np.asarray(x, dtype=float) - self.feature_mean) / self.feature_scale

    def predict_proba(self, x) -> np.ndarray:
        """Class probabilities for a batch of raw fingerprints, shape ``(n, n_classes)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if not np.all(np.isfinite(x)):
            raise ValueError("fingerprint contains non-finite values")
        return forward_batch(self.params, self.standardize(x))[1]

    def to_dict(self):
        return {
            "band_index": int(self.band_index),
            "hidden_size": int(self.hidden_size),
            "weights_input_hidden": self.w1.tolist(),
            "bias_hidden": self.b1.tolist(),
            "weights_hidden_output": self.w2.tolist(),
            "bias_output": self.b2.tolist(),
            "feature_mean": self.feature_mean.tolist(),
            "feature_scale": self.feature_scale.tolist(),
            "seed": int(self.seed),
            "validation_cross_entropy": float(self.validation_loss),
            **({"extra": self.extra} if self.extra else {}),
        }

    @classmethod
    def from_dict(cls, d):
        model = cls(
            band_index=int(d["band_index"]),
            w1=np.array(d["weights_input_hidden"], dtype=float),
            b1=np.array(d["bias_hidden"], dtype=float),
            w2=np.array(d["weights_hidden_output"], dtype=float),
            b2=np.array(d["bias_output"], dtype=float),
            feature_mean=np.array(d["feature_mean"], dtype=float),
            feature_scale=np.array(d["feature_scale"], dtype=float),
            seed=int(d.get("seed", 0)),
            validation_loss=float(d.get("validation_cross_entropy", float("nan"))),
            extra=d.get("extra", {}),
        )
        if model.hidden_size != d["hidden_size"]:
            raise ValueError("hidden_size does not match the weight matrix shape")
        return model

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def forward(model: BandClassifier, fingerprint) -> np.ndarray:
    """Softmax probabilities for a single fingerprint."""
    x = np.asarray(fingerprint, dtype=float)
    if x.ndim != 1:
        raise ValueError("forward expects a single fingerprint; use predict_proba for batches")
    return model.predict_proba(x)[0]


def _check_labels(labels, n_classes):
    missing = sorted(set(range(1, n_classes + 1)) - set(np.unique(labels).tolist()))
    if missing:
        raise ValueError(f"training data has no samples of class(es) {missing}")


def split_validation(n, fraction, rng):
    """Shuffled (train_idx, val_idx)."""
    perm = rng.permutation(n)
    n_val = max(1, int(round(fraction * n)))
    return perm[n_val:], perm[:n_val]


def fit_standardization(x):
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def train(features, labels, config: TrainConfig = TrainConfig(), hidden_size=20, band_index=0,
          n_classes=N_CLASSES, split=None):
    """Fit a classifier by mini-batch gradient descent with momentum.

    Holds out ``validation_fraction`` of the rows (or uses ``split``, a pair of
    index arrays), stops after ``patience`` epochs without validation
    improvement and returns the weights of the best validation epoch.

    Returns ``(model, history)``; ``history`` has per-epoch ``train_loss`` and
    ``val_loss`` lists.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    _check_labels(y, n_classes)
    rng = np.random.default_rng(config.seed)
    if split is None:
        split = split_validation(len(y), config.validation_fraction, rng)
    tr, va = split

    mean, scale = fit_standardization(x[tr])
    xs = (x - mean) / scale
    xt, tt = xs[tr], one_hot(y[tr], n_classes)
    xv, tv = xs[va], one_hot(y[va], n_classes)

    params = init_params(x.shape[1], hidden_size, n_classes, rng)
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    best = {k: v.copy() for k, v in params.items()}
    best_val = np.inf
    since_best = 0
    history = {"train_loss": [], "val_loss": []}

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(tr))
        for start in range(0, len(order), config.batch_size):
            b = order[start : start + config.batch_size]
            _, grads = loss_and_grads(params, xt[b], tt[b])
            for k in params:
                velocity[k] = config.momentum * velocity[k] - config.learning_rate * grads[k]
                params[k] = params[k] + velocity[k]
        train_loss = loss_and_grads(params, xt, tt)[0]
        val_loss = loss_and_grads(params, xv, tv)[0]
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergedError(epoch, train_loss)
        history["train_loss"].append(float(train_loss))
        history["val_loss"].append(float(val_loss))
        if val_loss < best_val:
            best_val = val_loss
            best = {k: v.copy() for k, v in params.items()}
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    model = BandClassifier(band_index, best["w1"], best["b1"], best["w2"], best["b2"], mean, scale,
                           seed=config.seed, validation_loss=float(best_val))
    return model, history


def select_hidden_size(features, labels, candidates=DEFAULT_HIDDEN_SIZES, config: TrainConfig = TrainConfig(),
                       band_index=0, n_classes=N_CLASSES, tie_tol=1e-9):
    """Train one model per candidate size on a shared split; pick the lowest validation loss.

    Returns ``(best_size, losses, models)`` where ``losses`` maps each
    candidate to its validation cross-entropy. Ties within ``tie_tol`` go to
    the smaller size.
    """
    candidates = sorted(set(int(c) for c in candidates))
    if not candidates:
        raise ValueError("no hidden-size candidates given")
    for c in candidates:
        if not 5 <= c <= 40:
            raise ValueError(f"hidden size {c} outside [5, 40]")
    y = np.asarray(labels, dtype=int)
    split = split_validation(len(y), config.validation_fraction, np.random.default_rng(config.seed))
    losses, models = {}, {}
    for c in candidates:
        model, _ = train(features, y, config, c, band_index, n_classes, split=split)
        losses[c] = model.validation_loss
        models[c] = model
    best = candidates[0]
    for c in candidates[1:]:
        if losses[c] < losses[best] - tie_tol:
            best = c
    return best, losses, models


def weighted_random_class(probabilities, rng) -> int:
    """Draw a 1-based class with the given probabilities."""
    p = np.asarray(probabilities, dtype=float)
    return int(sample_classes(p[None, :], rng)[0])


def sample_classes(probabilities, rng) -> np.ndarray:
    """One weighted draw per row of a probability matrix (1-based classes)."""
    p = np.asarray(probabilities, dtype=float)
    cdf = np.cumsum(p, axis=1)
    u = rng.random(p.shape[0]) * cdf[:, -1]
    # first index whose cumulative mass exceeds u; zero-mass classes are never chosen
    idx = (cdf <= u[:, None]).sum(axis=1)
    return idx + 1


@dataclass
class ConfusionMatrix:
    counts: np.ndarray
    runs_averaged: int
    class_sizes: np.ndarray

    def row_fractions(self):
        return self.counts / self.class_sizes[:, None]

    def write_csv(self, path, labels=CLASS_LABELS):
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["true\\predicted", *labels])
            for lab, row in zip(labels, self.counts):
                w.writerow([lab, *(repr(float(v)) for v in row)])

    @classmethod
    def read_csv(cls, path):
        with Path(path).open() as fh:
            rows = list(csv.reader(fh))[1:]
        counts = np.array([[float(v) for v in r[1:]] for r in rows])
        return cls(counts, 0, counts.sum(axis=1))


def averaged_confusion_matrix(model: BandClassifier, features, labels, num_runs=50, rng=None) -> ConfusionMatrix:
    """Confusion matrix averaged over repeated weighted-random predictions.

    Off-diagonal cells are run averages; each diagonal cell is the class size
    minus the averaged off-diagonal sum of its row, so rows sum to the class
    size exactly.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    y = np.asarray(labels, dtype=int)
    k = model.n_classes
    sizes = np.array([(y == c).sum() for c in range(1, k + 1)], dtype=float)
    if np.any(sizes == 0):
        raise ValueError(f"test set has empty class(es) {[c + 1 for c in np.flatnonzero(sizes == 0)]}")
    probs = model.predict_proba(features)
    total = np.zeros((k, k))
    for _ in range(num_runs):
        pred = sample_classes(probs, rng)
        np.add.at(total, (y - 1, pred - 1), 1.0)
    avg = total / num_runs
    np.fill_diagonal(avg, 0.0)
    np.fill_diagonal(avg, sizes - avg.sum(axis=1))
    return ConfusionMatrix(avg, num_runs, sizes)
