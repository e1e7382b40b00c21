"""Soft-margin kernel SVM trained by sequential minimal optimization.

Labels use the package's 1 = up / 0 = down encoding on the outside and
+1 / -1 internally. The decision function is

    f(x) = sum_i coef_i * K(sv_i, x) + bias,    coef_i = y_i * alpha_i

and a zero decision value predicts up, matching the flat-close rule.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _accel, _pure
from .errors import DegenerateTrainingError, DomainError, NonConvergenceError, ValidationError
from .timeseries import Direction

KINDS = ("linear", "polynomial", "rbf")
DEFAULT_C = 100.0
# stopping gap on the maximal violating pair; see KKT_TOL for the audit bound
DEFAULT_TOL = 1e-6
KKT_TOL = 1e-3
FULL_GRAM_LIMIT = 5000
# floor on the default SMO pair-update budget; ill-conditioned duals with
# large C can need a few hundred thousand updates even for p < 50
MIN_ITER_CAP = 10_000_000
FORMAT = "pcasvm.svm"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    degree: int = 3
    gamma: Optional[float] = None
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown kernel {self.kind!r}; choose from {KINDS}")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValidationError("polynomial degree must be a positive integer")
        if self.gamma is not None and not self.gamma > 0:
            raise ValidationError("gamma must be positive")

    def resolved(self, n_features: int) -> "KernelSpec":
        """Fill in the default RBF width ``gamma = 1 / n_features``."""
        if self.kind == "rbf" and self.gamma is None:
            return KernelSpec(self.kind, self.degree, 1.0 / n_features, self.coef0)
        return self

    def to_dict(self) -> dict:
        return {"kind": self.kind, "degree": self.degree, "gamma": self.gamma, "coef0": self.coef0}


@dataclass(frozen=True)
class TrainingSet:
    """Feature rows with 0/1 direction labels (and optional row dates)."""

    features: np.ndarray
    labels: np.ndarray
    dates: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64, copy=True)
        if x.ndim == 1:
            x = x[:, None]
        y = np.array(self.labels, dtype=np.int8, copy=True).reshape(-1)
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise ValidationError(f"features {x.shape} and labels {y.shape} disagree")
        if not np.all(np.isfinite(x)):
            raise ValidationError("features contain non-finite entries")
        if not np.all((y == Direction.UP) | (y == Direction.DOWN)):
            raise ValidationError("labels must be 0 (down) or 1 (up)")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def signed_labels(self) -> np.ndarray:
        return np.where(self.labels == Direction.UP, 1.0, -1.0)


@dataclass(frozen=True)
class SVMModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    kernel: KernelSpec
    C: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "kernel": self.kernel.to_dict(),
            "C": self.C,
            "bias": self.bias,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coefs": self.dual_coefs.tolist(),
            "diagnostics": self.diagnostics,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SVMModel":
        doc = json.loads(text)
        if doc.get("format") != FORMAT or doc.get("version") != FORMAT_VERSION:
            raise ValidationError(f"not a {FORMAT} v{FORMAT_VERSION} document")
        sv = np.asarray(doc["support_vectors"], dtype=np.float64)
        return cls(
            support_vectors=sv.reshape(len(doc["dual_coefs"]), -1),
            dual_coefs=np.asarray(doc["dual_coefs"], dtype=np.float64),
            bias=float(doc["bias"]),
            kernel=KernelSpec(**doc["kernel"]),
            C=float(doc["C"]),
            diagnostics=doc.get("diagnostics", {}),
        )


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DomainError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if spec.kind == "linear":
        return float(x @ y)
    if spec.kind == "polynomial":
        return float((x @ y + spec.coef0) ** spec.degree)
    gamma = spec.resolved(x.shape[-1]).gamma
    diff = x - y
    return math.exp(-gamma * float(diff @ diff))


def kernel_matrix(spec: KernelSpec, a, b) -> np.ndarray:
    """Kernel values between every row of ``a`` and every row of ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DomainError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    dots = a @ b.T
    if spec.kind == "linear":
        return dots
    if spec.kind == "polynomial":
        return (dots + spec.coef0) ** spec.degree
    gamma = spec.resolved(a.shape[1]).gamma
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * dots
    np.maximum(sq, 0.0, out=sq)
    if a is b or (a.shape == b.shape and np.array_equal(a, b)):
        np.fill_diagonal(sq, 0.0)
    return np.exp(-gamma * sq)


def dual_objective(alpha, y, gram) -> float:
    """Dual value ``sum(alpha) - 1/2 (alpha*y)' K (alpha*y)`` (to be maximised)."""
    ay = np.asarray(alpha) * np.asarray(y)
    return float(np.sum(alpha) - 0.5 * ay @ gram @ ay)


def _bias(alpha, grad, y, C):
    v = -y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        return float(v[free].mean())
    pos = y > 0
    up = (pos & (alpha < C)) | (~pos & (alpha > 0))
    low = (pos & (alpha > 0)) | (~pos & (alpha < C))
    hi = v[up].max() if np.any(up) else v[low].min()
    lo = v[low].min() if np.any(low) else hi
    return 0.5 * (float(hi) + float(lo))


def kkt_violations(alpha, y, margins, C) -> np.ndarray:
    """Per-point KKT residual given ``margins = y * f(x)`` on the training set."""
    alpha = np.asarray(alpha)
    viol = np.zeros_like(margins)
    at_zero = alpha <= 0
    at_c = alpha >= C
    free = ~at_zero & ~at_c
    viol[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
    viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
    viol[free] = np.abs(margins[free] - 1.0)
    return viol


def train(
    data: TrainingSet,
    kernel: KernelSpec = KernelSpec(),
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_iter: Optional[int] = None,
) -> SVMModel:
    """Fit a C-SVM by SMO.

    The iteration cap defaults to the larger of ``100 * p * p`` pair
    updates and ``MIN_ITER_CAP``. Hitting it raises NonConvergenceError rather than
    returning a half-trained model.
    """
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}")
    y = data.signed_labels()
    if np.all(y > 0) or np.all(y < 0):
        raise DegenerateTrainingError("training labels contain a single class")
    # Solve with the first row's class as +1. The dual is unchanged, but SMO's
    # pair choice is not mirror-symmetric, so this makes flipping every label
    # negate the decision function exactly instead of to within the gap.
    orient = float(y[0])
    y = orient * y
    x = data.features
    p = len(y)
    spec = kernel.resolved(data.n_features)
    if max_iter is None:
        max_iter = max(MIN_ITER_CAP, 100 * p * p)
    if p <= FULL_GRAM_LIMIT:
        gram = kernel_matrix(spec, x, x)
        alpha, grad, n_iter, gap = _accel.smo_solve(gram, y, float(C), float(tol), int(max_iter))
    else:
        diag = np.array([kernel_eval(spec, row, row) for row in x])
        alpha, grad, n_iter, gap = _pure.smo_solve(
            lambda i: kernel_matrix(spec, x[i], x)[0], diag, y, float(C), float(tol), int(max_iter)
        )
    diagnostics = {"iterations": int(n_iter), "gap": float(gap), "n_train": p}
    if gap > tol:
        raise NonConvergenceError(f"SMO stopped after {n_iter} iterations with gap {gap:.3e} > {tol:.1e}", diagnostics)
    bias = _bias(alpha, grad, y, C)
    margins = y * (y * (grad + 1.0) + bias)
    diagnostics["max_kkt_violation"] = float(kkt_violations(alpha, y, margins, C).max())
    diagnostics["dual_objective"] = float(-(0.5 * alpha @ (grad - 1.0)))
    diagnostics["n_support"] = int(np.count_nonzero(alpha > 0))
    sv = alpha > 0
    return SVMModel(
        support_vectors=x[sv].copy(),
        dual_coefs=orient * (y * alpha)[sv],
        bias=orient * bias,
        kernel=spec,
        C=float(C),
        diagnostics=diagnostics,
    )


def decision_values(model: SVMModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.n_features:
        raise DomainError(f"expected {model.n_features} features, got {x.shape[1]}")
    if len(model.dual_coefs) == 0:
        return np.full(x.shape[0], model.bias)
    return kernel_matrix(model.kernel, x, model.support_vectors) @ model.dual_coefs + model.bias


def decision_value(model: SVMModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("decision_value takes a single feature vector")
    return float(decision_values(model, x)[0])


def predict(model: SVMModel, x) -> Direction:
    return Direction.UP if decision_value(model, x) >= 0 else Direction.DOWN


def predict_batch(model: SVMModel, x) -> np.ndarray:
    return np.where(decision_values(model, x) >= 0, Direction.UP, Direction.DOWN).astype(np.int8)
