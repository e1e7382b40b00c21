"""Principal component analysis on the sample covariance matrix.

The eigendecomposition is a cyclic Jacobi solve (compiled when the
extension is built). Eigenvectors are sign-normalised so their
largest-magnitude entry is positive, which makes fits deterministic.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _accel
from .errors import DegenerateDataError, DomainError, NumericalError, ValidationError
from .timeseries import AlignedPanel, rdp

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
CLAMP_RTOL = 1e-10
DEFAULT_THRESHOLD = 0.70


def _frozen(arr):
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    scale: Optional[np.ndarray] = None
    labels: tuple = ()
    sweeps: int = field(default=0, compare=False)

    def __post_init__(self):
        for name in ("mean", "eigenvalues", "eigenvectors"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.scale is not None:
            object.__setattr__(self, "scale", _frozen(self.scale))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_inputs(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class ContributionReport:
    eigenvalues: np.ndarray
    rates: np.ndarray
    cumulative: np.ndarray
    selected_m: Optional[int] = None


def _covariance_eigh(cov):
    w, v, sweeps = _accel.jacobi_eigh(cov, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NumericalError(f"Jacobi did not converge within {JACOBI_MAX_SWEEPS} sweeps")
    n = len(w)
    dominant = np.abs(v).argmax(axis=0)
    flip = v[dominant, np.arange(n)] < 0
    v[:, flip] *= -1.0
    # descending eigenvalue, ties by the dominant entry's row index
    order = np.lexsort((dominant, -w))
    w = w[order]
    v = v[:, order]
    top = max(float(w[0]), 0.0) if n else 0.0
    negative = w < 0
    if np.any(w[negative] <= -CLAMP_RTOL * top):
        raise NumericalError(f"covariance is not positive semi-definite (eigenvalue {w.min():.3e})")
    w[negative] = 0.0
    return w, v, sweeps


def fit_pca(data, correlation: bool = False, labels: Sequence[str] = ()) -> PCAModel:
    """Fit PCA to ``data`` (rows are observations, columns variables).

    Columns are centred; with ``correlation=True`` they are also scaled to
    unit sample variance. The covariance uses the ``rows - 1`` divisor.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 1:
        raise DomainError("data must be a 2-D matrix with at least one column")
    if x.shape[0] < 2:
        raise DomainError(f"need at least 2 observations, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("data contains non-finite entries")
    if labels and len(labels) != x.shape[1]:
        raise DomainError("one label per column required")
    mean = x.mean(axis=0)
    centred = x - mean
    scale = None
    if correlation:
        scale = centred.std(axis=0, ddof=1)
        if np.any(scale == 0):
            bad = int(np.flatnonzero(scale == 0)[0])
            raise DegenerateDataError(f"column {bad} is constant; correlation PCA undefined")
        centred = centred / scale
    cov = centred.T @ centred / (x.shape[0] - 1)
    cov = 0.5 * (cov + cov.T)
    w, v, sweeps = _covariance_eigh(cov)
    return PCAModel(mean, w, v, scale, tuple(labels), sweeps)


def contribution(model: PCAModel) -> ContributionReport:
    total = float(model.eigenvalues.sum())
    if not total > 0:
        raise DegenerateDataError("all eigenvalues are zero; contribution rates undefined")
    rates = model.eigenvalues / total
    return ContributionReport(model.eigenvalues.copy(), rates, np.cumsum(rates))


def select_components(report: ContributionReport, threshold: float = DEFAULT_THRESHOLD) -> int:
    """Smallest m whose cumulative contribution reaches ``threshold``."""
    if not 0 < threshold <= 1:
        raise DomainError(f"threshold must lie in (0, 1], got {threshold}")
    hits = np.flatnonzero(report.cumulative >= threshold)
    # the running sum can land a few ulps under 1.0
    return int(hits[0]) + 1 if len(hits) else len(report.cumulative)


def project(model: PCAModel, data, m: int) -> np.ndarray:
    """Scores of ``data`` on the first ``m`` components."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.n_inputs:
        raise DomainError(f"expected {model.n_inputs} columns, got shape {x.shape}")
    if not 1 <= m <= model.n_inputs:
        raise DomainError(f"m must be in [1, {model.n_inputs}], got {m}")
    centred = x - model.mean
    if model.scale is not None:
        centred = centred / model.scale
    return centred @ model.eigenvectors[:, :m]


def biplot_loadings(model: PCAModel, scale: bool = True) -> np.ndarray:
    """Per-variable loadings on PC1 and PC2 (``n_inputs x 2``).

    With ``scale`` each column is multiplied by the square root of its
    eigenvalue so arrow length reflects the component's variance.
    """
    if model.n_inputs < 2:
        raise DomainError("biplot needs at least two components")
    loadings = model.eigenvectors[:, :2].copy()
    if scale:
        loadings *= np.sqrt(model.eigenvalues[:2])
    return loadings


def fit_panel_pca(panel: AlignedPanel, instruments: Sequence[str], lag: int = 1, correlation: bool = False) -> PCAModel:
    """Whole-period PCA on the RDP-``lag`` columns of ``instruments``."""
    returns = np.column_stack([rdp(panel.column(i), lag).values for i in instruments])
    return fit_pca(returns, correlation=correlation, labels=instruments)


def scree_csv(model: PCAModel) -> str:
    report = contribution(model)
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["component", "eigenvalue", "rate", "cumulative"])
    for k, (lam, rate, cum) in enumerate(zip(report.eigenvalues, report.rates, report.cumulative), start=1):
        writer.writerow([k, repr(float(lam)), repr(float(rate)), repr(float(cum))])
    return buf.getvalue()


def biplot_csv(loadings, labels: Sequence[str]) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["instrument", "pc1", "pc2"])
    for label, (pc1, pc2) in zip(labels, np.asarray(loadings)):
        writer.writerow([label, repr(float(pc1)), repr(float(pc2))])
    return buf.getvalue()
