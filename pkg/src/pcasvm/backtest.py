"""Rolling-window backtest: windows, feature assembly, model runs, reports.

Each window trains on whole calendar years and tests on the following
year(s), half-open on both ends. PCA is fitted on the training rows of
each window only and test rows are projected through that frozen model,
so nothing from the test year leaks into the features.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import __version__
from .baselines import mlp_predict_batch, random_walk_predict, train_mlp
from .config import DISPLAY_NAMES, ExperimentConfig
from .errors import BacktestError, DomainError, PcaSvmError, ValidationError, WindowAssemblyError
from .pca import contribution, fit_pca, project, select_components
from .svm import TrainingSet, predict_batch, train
from .timeseries import AlignedPanel, direction_labels, rdp_padded

log = logging.getLogger(__name__)

REPORT_FORMAT = "pcasvm.backtest-report"
REPORT_VERSION = 1


@dataclass(frozen=True)
class WindowSpec:
    iteration: int
    train_start: date
    train_end: date
    test_start: date
    test_end: date

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "train": [self.train_start.isoformat(), self.train_end.isoformat()],
            "test": [self.test_start.isoformat(), self.test_end.isoformat()],
        }


def build_windows(first_year: int, train_years: int = 3, test_years: int = 1, iterations: int = 7) -> list[WindowSpec]:
    """Yearly sliding windows: iteration i trains on [y+i-1, y+i-1+train) and tests on the next ``test_years``."""
    if iterations < 1:
        raise DomainError("iterations must be at least 1")
    if train_years < 1 or test_years < 1:
        raise DomainError("train_years and test_years must be at least 1")
    windows = []
    for i in range(1, iterations + 1):
        start = first_year + i - 1
        split = start + train_years
        windows.append(WindowSpec(i, date(start, 1, 1), date(split, 1, 1), date(split, 1, 1), date(split + test_years, 1, 1)))
    return windows


class _WindowMatrices(NamedTuple):
    train_rows: np.ndarray
    test_rows: np.ndarray
    factors: np.ndarray  # all panel rows x 3
    constituents: np.ndarray  # all panel rows x k
    labels: np.ndarray  # all panel rows; -1 where tomorrow is unknown


def _panel_matrices(panel: AlignedPanel, config: ExperimentConfig):
    lags = config.lags
    factors = np.column_stack([
        rdp_padded(panel.column(config.index), lags.index),
        rdp_padded(panel.column(config.sp500), lags.factor),
        rdp_padded(panel.column(config.exr), lags.factor),
    ])
    cons = config.constituent_ids(panel)
    constituents = np.column_stack([rdp_padded(panel.column(c), lags.constituent) for c in cons])
    labels = np.full(len(panel), -1, dtype=np.int8)
    if len(panel) >= 2:
        labels[:-1] = direction_labels(panel.column(config.target)).values
    return factors, constituents, labels


def _window_matrices(panel: AlignedPanel, config: ExperimentConfig, window: WindowSpec) -> _WindowMatrices:
    config.validate_against(panel)
    factors, constituents, labels = _panel_matrices(panel, config)
    usable = np.all(np.isfinite(factors), axis=1) & np.all(np.isfinite(constituents), axis=1) & (labels >= 0)
    cal = panel.calendar

    def rows(start, end):
        inside = (cal >= np.datetime64(start, "D")) & (cal < np.datetime64(end, "D"))
        return np.flatnonzero(inside & usable)

    train_rows = rows(window.train_start, window.train_end)
    test_rows = rows(window.test_start, window.test_end)
    first_usable = str(cal[config.lags.longest]) if len(cal) > config.lags.longest else None
    for name, picked, start, end in (
        ("training", train_rows, window.train_start, window.train_end),
        ("testing", test_rows, window.test_start, window.test_end),
    ):
        if len(picked) == 0:
            raise WindowAssemblyError(
                f"window {window.iteration}: no usable {name} rows in [{start}, {end}); "
                f"panel covers {cal[0]}..{cal[-1]}, first usable date {first_usable}",
                first_usable,
            )
    return _WindowMatrices(train_rows, test_rows, factors, constituents, labels)


class _PCAFeatures(NamedTuple):
    train: np.ndarray
    test: np.ndarray
    n_components: int


def _pca_scores(mats: _WindowMatrices, config: ExperimentConfig) -> _PCAFeatures:
    cons_train = mats.constituents[mats.train_rows]
    model = fit_pca(cons_train, correlation=config.pca_correlation)
    m = select_components(contribution(model), config.pca_threshold)
    return _PCAFeatures(project(model, cons_train, m), project(model, mats.constituents[mats.test_rows], m), m)


def _sets(mats: _WindowMatrices, cal, train_extra, test_extra):
    train = TrainingSet(
        np.hstack([mats.factors[mats.train_rows], train_extra]),
        mats.labels[mats.train_rows],
        cal[mats.train_rows],
    )
    test = TrainingSet(
        np.hstack([mats.factors[mats.test_rows], test_extra]),
        mats.labels[mats.test_rows],
        cal[mats.test_rows],
    )
    return train, test


def assemble_features(
    panel: AlignedPanel, config: ExperimentConfig, window: WindowSpec, use_pca: bool = True
) -> tuple[TrainingSet, TrainingSet]:
    """Train and test sets for one window.

    Each row is ``[index RDP, S&P500 RDP, EXR RDP, constituent block]``
    labelled with the target's next-day direction. The constituent block
    is the first m PCA scores (fitted on the training rows) or, with
    ``use_pca=False``, the raw constituent RDP columns.
    """
    mats = _window_matrices(panel, config, window)
    if use_pca:
        feats = _pca_scores(mats, config)
        return _sets(mats, panel.calendar, feats.train, feats.test)
    return _sets(mats, panel.calendar, mats.constituents[mats.train_rows], mats.constituents[mats.test_rows])


def hit_ratio(predictions, labels) -> float:
    """Percentage of predictions matching the realised direction."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.ndim != 1:
        raise DomainError(f"length mismatch: {predictions.shape} vs {labels.shape}")
    if predictions.size == 0:
        raise DomainError("hit ratio of an empty sequence is undefined")
    return 100.0 * int(np.count_nonzero(predictions == labels)) / predictions.size


def _evaluate_window(panel: AlignedPanel, config: ExperimentConfig, window: WindowSpec) -> dict:
    mats = _window_matrices(panel, config, window)
    cal = panel.calendar
    test_labels = mats.labels[mats.test_rows]
    result = {"n_train": int(len(mats.train_rows)), "n_test": int(len(mats.test_rows)), "hit_ratios": {}}
    needs_pca = any(m in config.models for m in ("pca-svm", "pca-ann"))
    needs_raw = any(m in config.models for m in ("svm", "ann"))
    sets = {}
    if needs_pca:
        feats = _pca_scores(mats, config)
        result["n_components"] = feats.n_components
        sets["pca"] = _sets(mats, cal, feats.train, feats.test)
    if needs_raw:
        sets["raw"] = _sets(mats, cal, mats.constituents[mats.train_rows], mats.constituents[mats.test_rows])
    for name in config.models:
        if name == "rw":
            preds = np.array([random_walk_predict(mats.labels[:j]) for j in mats.test_rows], dtype=np.int8)
        else:
            train_set, test_set = sets["pca" if name.startswith("pca-") else "raw"]
            if name.endswith("svm"):
                model = train(train_set, config.kernel, config.C, tol=config.svm_tol)
                preds = predict_batch(model, test_set.features)
                result.setdefault("svm_iterations", {})[name] = model.diagnostics["iterations"]
            else:
                model = train_mlp(train_set, config.mlp)
                preds = mlp_predict_batch(model, test_set.features)
        result["hit_ratios"][name] = hit_ratio(preds, test_labels)
    log.info(
        "event=window iteration=%d n_train=%d n_test=%d %s",
        window.iteration, result["n_train"], result["n_test"],
        " ".join(f"{k}={v:.2f}" for k, v in result["hit_ratios"].items()),
    )
    return result


def _guarded(panel, config, window):
    try:
        return _evaluate_window(panel, config, window)
    except PcaSvmError as exc:
        raise BacktestError(window.iteration, exc) from exc


def _sample_std(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


@dataclass
class BacktestReport:
    models: tuple
    windows: tuple
    hit_ratios: dict  # model -> list of per-iteration percentages
    details: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, values in self.hit_ratios.items():
            if len(values) != len(self.windows):
                raise ValidationError(f"{name}: {len(values)} hit ratios for {len(self.windows)} windows")
            if any(not 0 <= v <= 100 for v in values):
                raise ValidationError(f"{name}: hit ratios must lie in [0, 100]")

    @property
    def iterations(self) -> list:
        return [w.iteration for w in self.windows]

    def mean(self, model: str) -> float:
        return float(np.mean(self.hit_ratios[model]))

    def std(self, model: str) -> float:
        """Sample std (n-1 divisor); 0 for a single iteration."""
        return _sample_std(self.hit_ratios[model])

    @property
    def std_defined(self) -> bool:
        return len(self.windows) > 1

    def to_dict(self) -> dict:
        iterations = []
        details = self.details or [{}] * len(self.windows)
        for k, (w, extra) in enumerate(zip(self.windows, details)):
            row = w.to_dict()
            row.update({key: v for key, v in extra.items() if key != "hit_ratios"})
            row["hit_ratios"] = {m: self.hit_ratios[m][k] for m in self.models}
            iterations.append(row)
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "models": list(self.models),
            "iterations": iterations,
            "summary": {
                "mean": {m: self.mean(m) for m in self.models},
                "std": {m: self.std(m) for m in self.models},
                "std_divisor": "n-1",
                "std_defined": self.std_defined,
            },
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "BacktestReport":
        if doc.get("format") != REPORT_FORMAT or doc.get("version") != REPORT_VERSION:
            raise ValidationError(f"not a {REPORT_FORMAT} v{REPORT_VERSION} document")
        models = tuple(doc["models"])
        windows, details = [], []
        ratios = {m: [] for m in models}
        for row in doc["iterations"]:
            (tr0, tr1), (te0, te1) = row["train"], row["test"]
            windows.append(WindowSpec(int(row["iteration"]), *(date.fromisoformat(x) for x in (tr0, tr1, te0, te1))))
            details.append({k: v for k, v in row.items() if k not in ("iteration", "train", "test", "hit_ratios")})
            for m in models:
                ratios[m].append(float(row["hit_ratios"][m]))
        return cls(models, tuple(windows), ratios, details, doc.get("metadata", {}))

    @classmethod
    def from_json(cls, text: str) -> "BacktestReport":
        return cls.from_dict(json.loads(text))


def run_backtest(config: ExperimentConfig, panel: AlignedPanel, jobs: int = 1, windows: Optional[Sequence[WindowSpec]] = None) -> BacktestReport:
    """Train and score every configured model on every window.

    Windows may run in worker processes (``jobs > 1``); results are merged
    in iteration order. The first failing window aborts the run.
    """
    config.validate_against(panel)
    if windows is None:
        w = config.windows
        windows = build_windows(w.first_year, w.train_years, w.test_years, w.iterations)
    windows = tuple(windows)
    if jobs > 1 and len(windows) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(windows))) as pool:
            futures = [pool.submit(_guarded, panel, config, w) for w in windows]
            results = [f.result() for f in futures]
    else:
        results = [_guarded(panel, config, w) for w in windows]
    ratios = {m: [r["hit_ratios"][m] for r in results] for m in config.models}
    details = [{k: v for k, v in r.items() if k != "hit_ratios"} for r in results]
    metadata = {
        "config": config.to_dict(),
        "config_digest": config.digest(),
        "data_digest": panel.digest(),
        "panel": {"start": str(panel.calendar[0]), "end": str(panel.calendar[-1]),
                  "rows": len(panel), "instruments": list(panel.instruments)},
        "std_divisor": "n-1",
        "generated_at": datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
        "version": __version__,
    }
    return BacktestReport(tuple(config.models), windows, ratios, details, metadata)


class RenderedTables(NamedTuple):
    text: str
    csv: str


def _pct(value: float) -> str:
    return f"{value:.2f}%"


def summarize(report: BacktestReport) -> RenderedTables:
    """Per-iteration hit-ratio table with Average and Std rows, as text and CSV."""
    if not report.windows:
        raise DomainError("report has no iterations")
    heads = [DISPLAY_NAMES.get(m, m) for m in report.models]
    flag = "" if report.std_defined else "*"
    rows = [[str(it)] + [_pct(report.hit_ratios[m][k]) for m in report.models] for k, it in enumerate(report.iterations)]
    mean_row = ["Average"] + [_pct(report.mean(m)) for m in report.models]
    std_row = ["Std"] + [_pct(report.std(m)) + flag for m in report.models]
    table = [["Iteration"] + heads] + rows + [mean_row, std_row]
    widths = [max(len(r[c]) for r in table) for c in range(len(table[0]))]
    rule = "-" * (sum(widths) + 2 * (len(widths) - 1))

    def line(cells):
        return "  ".join(cell.rjust(w) for cell, w in zip(cells, widths)).rstrip()

    out = [line(table[0]), rule, *(line(r) for r in rows), rule, line(mean_row), line(std_row)]
    if flag:
        out.append("* single iteration: sample std undefined, shown as 0")
    text = "\n".join(out) + "\n"

    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["iteration", *heads])
    for k, it in enumerate(report.iterations):
        writer.writerow([it, *(f"{report.hit_ratios[m][k]:.2f}" for m in report.models)])
    writer.writerow(["average", *(f"{report.mean(m):.2f}" for m in report.models)])
    writer.writerow(["std", *(f"{report.std(m):.2f}" for m in report.models)])
    return RenderedTables(text, buf.getvalue())
