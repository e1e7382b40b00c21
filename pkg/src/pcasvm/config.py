"""Experiment configuration: JSON schema, dotted-path overrides, panel loading.

Schema (version 1)::

    {
      "schema_version": 1,
      "panel": {"sources": {"KOSPI": "kospi.csv", ...} | ["a.csv", ...],
                "reference": "KOSPI", "start": "2002-01-01", "end": "2012-01-01",
                "date_format": null}
               | {"csv": "panel.csv"},
      "target": "KOSPI",
      "factors": {"index": "KOSPI", "sp500": "SPX", "exr": "USDKRW"},
      "constituents": null,
      "lags": {"index": 3, "factor": 3, "constituent": 1},
      "pca": {"threshold": 0.7, "correlation": false},
      "windows": {"first_year": 2002, "train_years": 3, "test_years": 1, "iterations": 7},
      "models": ["pca-svm", "svm", "pca-ann", "ann", "rw"],
      "svm": {"kernel": "rbf", "C": 100, "gamma": null, "degree": 3, "coef0": 1.0, "tol": 1e-6},
      "mlp": {"hidden": 10, "learning_rate": 0.01, "epochs": 2000},
      "seeds": {"mlp": 0}
    }

Relative paths resolve against the config file's directory. ``constituents``
of null means every panel instrument that is not a factor series.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .baselines import MLPConfig
from .errors import ValidationError
from .svm import DEFAULT_C, DEFAULT_TOL, KernelSpec
from .timeseries import AlignedPanel, align_panel, read_price_csv

SCHEMA_VERSION = 1
MODEL_NAMES = ("pca-svm", "svm", "pca-ann", "ann", "rw")
DISPLAY_NAMES = {"pca-svm": "PCA-SVM", "svm": "SVM", "pca-ann": "PCA-ANN", "ann": "ANN", "rw": "RW"}

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "panel": {},
    "target": None,
    "factors": {"index": None, "sp500": None, "exr": None},
    "constituents": None,
    "lags": {"index": 3, "factor": 3, "constituent": 1},
    "pca": {"threshold": 0.7, "correlation": False},
    "windows": {"first_year": 2002, "train_years": 3, "test_years": 1, "iterations": 7},
    "models": list(MODEL_NAMES),
    "svm": {"kernel": "rbf", "C": DEFAULT_C, "gamma": None, "degree": 3, "coef0": 1.0, "tol": DEFAULT_TOL},
    "mlp": {"hidden": 10, "learning_rate": 0.01, "epochs": 2000},
    "seeds": {"mlp": 0},
}


@dataclass(frozen=True)
class Lags:
    index: int = 3
    factor: int = 3
    constituent: int = 1

    @property
    def longest(self) -> int:
        return max(self.index, self.factor, self.constituent)


@dataclass(frozen=True)
class WindowScheme:
    first_year: int = 2002
    train_years: int = 3
    test_years: int = 1
    iterations: int = 7


@dataclass(frozen=True)
class ExperimentConfig:
    target: str
    index: str
    sp500: str
    exr: str
    constituents: Optional[tuple] = None
    lags: Lags = Lags()
    pca_threshold: float = 0.7
    pca_correlation: bool = False
    windows: WindowScheme = WindowScheme()
    models: tuple = MODEL_NAMES
    kernel: KernelSpec = KernelSpec()
    C: float = DEFAULT_C
    svm_tol: float = DEFAULT_TOL
    mlp: MLPConfig = MLPConfig()
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for name, lag in vars(self.lags).items():
            if int(lag) != lag or lag < 1:
                raise ValidationError(f"lag {name} must be a positive integer, got {lag}")
        unknown = [m for m in self.models if m not in MODEL_NAMES]
        if unknown or not self.models:
            raise ValidationError(f"unknown or empty model list {list(self.models)}; choose from {MODEL_NAMES}")
        if not 0 < self.pca_threshold <= 1:
            raise ValidationError("pca.threshold must lie in (0, 1]")
        if not self.C > 0:
            raise ValidationError("svm.C must be positive")
        if self.windows.iterations < 1:
            raise ValidationError("windows.iterations must be at least 1")

    def factor_ids(self) -> tuple:
        return self.index, self.sp500, self.exr

    def constituent_ids(self, panel: AlignedPanel) -> tuple:
        """Constituents feeding the PCA, never including the target itself."""
        if self.constituents is not None:
            ids = tuple(self.constituents)
        else:
            skip = set(self.factor_ids())
            ids = tuple(i for i in panel.instruments if i not in skip)
        return tuple(i for i in ids if i != self.target)

    def validate_against(self, panel: AlignedPanel) -> None:
        missing = [i for i in (self.target, *self.factor_ids()) if i not in panel.instruments]
        if missing:
            raise ValidationError(f"instruments missing from panel: {missing}")
        cons = self.constituent_ids(panel)
        absent = [i for i in cons if i not in panel.instruments]
        if absent:
            raise ValidationError(f"constituents missing from panel: {absent}")
        if not cons:
            raise ValidationError("no constituent series left for the PCA input")

    def to_dict(self) -> dict:
        """Schema-shaped view of the effective settings (panel location excluded)."""
        return {
            "schema_version": SCHEMA_VERSION,
            "target": self.target,
            "factors": {"index": self.index, "sp500": self.sp500, "exr": self.exr},
            "constituents": list(self.constituents) if self.constituents is not None else None,
            "lags": vars(self.lags).copy(),
            "pca": {"threshold": self.pca_threshold, "correlation": self.pca_correlation},
            "windows": vars(self.windows).copy(),
            "models": list(self.models),
            "svm": {"kernel": self.kernel.kind, "C": self.C, "gamma": self.kernel.gamma,
                    "degree": self.kernel.degree, "coef0": self.kernel.coef0, "tol": self.svm_tol},
            "mlp": {"hidden": self.mlp.hidden, "learning_rate": self.mlp.learning_rate, "epochs": self.mlp.epochs},
            "seeds": {"mlp": self.mlp.seed},
        }

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` strings in order; values parse as JSON when they can."""
    doc = copy.deepcopy(doc)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValidationError(f"override {item!r} is not of the form key=value")
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                child = node[part] = {}
            node = child
        node[parts[-1]] = _parse_value(value)
    return doc


def normalise(doc: dict) -> dict:
    doc = _merge(DEFAULTS, doc)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {doc.get('schema_version')!r}")
    return doc


def config_from_dict(doc: dict) -> ExperimentConfig:
    doc = normalise(doc)
    factors = doc["factors"]
    target = doc["target"] or factors.get("index")
    if not target:
        raise ValidationError("config needs a target (or factors.index to default to)")
    for key in ("index", "sp500", "exr"):
        if not factors.get(key):
            raise ValidationError(f"factors.{key} is required")
    svm = doc["svm"]
    seeds = doc["seeds"]
    try:
        return ExperimentConfig(
            target=target,
            index=factors["index"],
            sp500=factors["sp500"],
            exr=factors["exr"],
            constituents=tuple(doc["constituents"]) if doc["constituents"] is not None else None,
            lags=Lags(**doc["lags"]),
            pca_threshold=float(doc["pca"]["threshold"]),
            pca_correlation=bool(doc["pca"]["correlation"]),
            windows=WindowScheme(**doc["windows"]),
            models=tuple(doc["models"]),
            kernel=KernelSpec(svm["kernel"], int(svm["degree"]), svm["gamma"], float(svm["coef0"])),
            C=float(svm["C"]),
            svm_tol=float(svm["tol"]),
            mlp=MLPConfig(seed=int(seeds["mlp"]), **doc["mlp"]),
            raw=doc,
        )
    except TypeError as exc:
        raise ValidationError(f"bad config field: {exc}") from None


def read_config(path, overrides=()) -> tuple[dict, Path]:
    """Load a config document, apply overrides and defaults; returns (doc, base_dir)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be an object")
    return normalise(apply_overrides(doc, overrides)), path.parent


def load_panel(doc: dict, base_dir=".") -> AlignedPanel:
    spec = doc.get("panel") or {}
    base = Path(base_dir)
    if "csv" in spec:
        return AlignedPanel.from_csv((base / spec["csv"]).read_bytes())
    sources = spec.get("sources")
    if not sources:
        raise ValidationError("panel needs either 'csv' or 'sources'")
    date_format = spec.get("date_format")
    if isinstance(sources, dict):
        series = [read_price_csv(base / p, iid, date_format) for iid, p in sources.items()]
    else:
        series = [read_price_csv(base / p, None, date_format) for p in sources]
    reference = spec.get("reference") or doc.get("factors", {}).get("index")
    if not reference:
        raise ValidationError("panel.reference (or factors.index) is required to align sources")
    return align_panel(series, reference, spec.get("start"), spec.get("end"))
