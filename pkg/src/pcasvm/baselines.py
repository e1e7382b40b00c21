"""Benchmark predictors: naive direction persistence and a one-hidden-layer MLP."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError, ValidationError
from .svm import TrainingSet
from .timeseries import Direction

FORMAT = "pcasvm.mlp"
FORMAT_VERSION = 1


def random_walk_predict(history) -> Direction:
    """Tomorrow repeats the most recent observed direction."""
    history = np.asarray(getattr(history, "values", history))
    if history.size == 0:
        raise DomainError("random-walk prediction needs at least one past label")
    return Direction(int(history[-1]))


def random_walk_hits(labels) -> float:
    """Hit ratio (%) of persistence over a label sequence, each day predicted from the previous one."""
    labels = np.asarray(labels)
    if labels.size < 2:
        raise DomainError("need at least two labels")
    return 100.0 * float(np.mean(labels[1:] == labels[:-1]))


@dataclass(frozen=True)
class MLPConfig:
    hidden: int = 10
    learning_rate: float = 0.01
    epochs: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.hidden < 1:
            raise ValidationError("hidden layer needs at least one unit")
        if self.epochs < 1:
            raise ValidationError("epochs must be at least 1")
        if not self.learning_rate > 0:
            raise ValidationError("learning rate must be positive")


@dataclass(frozen=True)
class MLPModel:
    w1: np.ndarray  # (d, h)
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (h,)
    b2: float
    config: MLPConfig = field(default_factory=MLPConfig)
    final_loss: float = float("nan")

    @property
    def n_features(self) -> int:
        return self.w1.shape[0]

    def params(self) -> tuple:
        return self.w1, self.b1, self.w2, self.b2

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "layers": [self.w1.shape[0], self.w1.shape[1], 1],
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2,
            "config": self.config.__dict__,
            "final_loss": self.final_loss,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MLPModel":
        doc = json.loads(text)
        if doc.get("format") != FORMAT or doc.get("version") != FORMAT_VERSION:
            raise ValidationError(f"not a {FORMAT} v{FORMAT_VERSION} document")
        d, h, _ = doc["layers"]
        return cls(
            np.asarray(doc["w1"], dtype=np.float64).reshape(d, h),
            np.asarray(doc["b1"], dtype=np.float64),
            np.asarray(doc["w2"], dtype=np.float64),
            float(doc["b2"]),
            MLPConfig(**doc["config"]),
            float(doc["final_loss"]),
        )


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(params, x):
    w1, b1, w2, b2 = params
    hidden = np.tanh(x @ w1 + b1)
    z = hidden @ w2 + b2
    return hidden, z


def loss_and_grad(params, x, y):
    """Mean binary cross-entropy and its gradient w.r.t. ``(w1, b1, w2, b2)``."""
    w1, b1, w2, b2 = params
    hidden, z = forward(params, x)
    n = x.shape[0]
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    dz = (_sigmoid(z) - y) / n
    gw2 = hidden.T @ dz
    gb2 = float(dz.sum())
    dpre = np.outer(dz, w2) * (1.0 - hidden * hidden)
    gw1 = x.T @ dpre
    gb1 = dpre.sum(axis=0)
    return loss, (gw1, gb1, gw2, gb2)


def init_params(n_features: int, config: MLPConfig):
    rng = np.random.default_rng(config.seed)
    lim1 = np.sqrt(6.0 / (n_features + config.hidden))
    lim2 = np.sqrt(6.0 / (config.hidden + 1))
    w1 = rng.uniform(-lim1, lim1, size=(n_features, config.hidden))
    w2 = rng.uniform(-lim2, lim2, size=config.hidden)
    return w1, np.zeros(config.hidden), w2, 0.0


def train_mlp(data: TrainingSet, config: MLPConfig = MLPConfig()) -> MLPModel:
    """Full-batch gradient descent on cross-entropy, seeded by ``config.seed``."""
    x = data.features
    y = data.labels.astype(np.float64)
    w1, b1, w2, b2 = init_params(x.shape[1], config)
    lr = config.learning_rate
    loss = float("nan")
    # overflow is detected below and reported as divergence
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            loss, (gw1, gb1, gw2, gb2) = loss_and_grad((w1, b1, w2, b2), x, y)
            if not np.isfinite(loss):
                raise DivergenceError(f"loss became non-finite at epoch {epoch}; try a smaller learning rate")
            w1 = w1 - lr * gw1
            b1 = b1 - lr * gb1
            w2 = w2 - lr * gw2
            b2 = b2 - lr * gb2
        loss, _ = loss_and_grad((w1, b1, w2, b2), x, y)
    if not np.isfinite(loss) or not all(np.all(np.isfinite(p)) for p in (w1, b1, w2, b2)):
        raise DivergenceError("parameters became non-finite; try a smaller learning rate")
    return MLPModel(w1, b1, w2, float(b2), config, loss)


def mlp_output(model: MLPModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.n_features:
        raise DomainError(f"expected {model.n_features} features, got {x.shape[1]}")
    _, z = forward(model.params(), x)
    return _sigmoid(z)


def mlp_predict(model: MLPModel, x) -> Direction:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("mlp_predict takes a single feature vector")
    return Direction.UP if mlp_output(model, x)[0] >= 0.5 else Direction.DOWN


def mlp_predict_batch(model: MLPModel, x) -> np.ndarray:
    return np.where(mlp_output(model, x) >= 0.5, Direction.UP, Direction.DOWN).astype(np.int8)
