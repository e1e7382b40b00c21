"""Synthetic panels with known structure, for tests and the example config.

``planted_signal_panel``
    The target's next-day direction equals the sign of the index's RDP-3,
    and the constituents form two co-moving blocks. Sign flips of the
    index move are balanced in blocks of 20 days so the label stream has
    no persistence to exploit.
``null_signal_panel``
    Independent random walks; the target moves up or down by a fair coin.

Run ``python -m pcasvm.synthetic --out DIR`` to write per-instrument CSVs
plus a ready-to-use ``config.json``.
"""

from __future__ import annotations

import argparse
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .timeseries import AlignedPanel, atomic_write, write_price_csv

INDEX, SP500, EXR, TARGET = "IDX", "SPX", "EXR", "TGT"


@dataclass(frozen=True)
class SyntheticPanel:
    panel: AlignedPanel
    config: dict
    blocks: dict  # constituent id -> block number


def _calendar(first_year: int, years: int, kind: str) -> np.ndarray:
    start = np.datetime64(f"{first_year}-01-01")
    # a few days past the last year so its final day still has a next-day label
    end = np.datetime64(f"{first_year + years}-01-15")
    days = np.arange(start, end, dtype="datetime64[D]")
    if kind == "business":
        days = days[np.is_busday(days)]
    elif kind != "daily":
        raise ValueError(f"calendar must be 'business' or 'daily', got {kind!r}")
    return days


def _config(constituents, first_year, train_years=3, test_years=1, iterations=7) -> dict:
    return {
        "schema_version": 1,
        "target": TARGET,
        "factors": {"index": INDEX, "sp500": SP500, "exr": EXR},
        "constituents": list(constituents),
        "windows": {"first_year": first_year, "train_years": train_years, "test_years": test_years, "iterations": iterations},
    }


def _balanced_signs(rng, n: int, block: int = 20) -> np.ndarray:
    flips = np.concatenate([rng.permutation(np.arange(block) % 2) for _ in range(n // block + 1)])[: n - 1]
    signs = np.empty(n)
    signs[0] = 1.0
    signs[1:] = np.where(np.cumsum(flips) % 2 == 0, 1.0, -1.0)
    return signs * rng.choice([-1.0, 1.0])


def _constituents(rng, n_days: int, n: int, sigmas=(1.6, 1.2), noise=0.7):
    ids = [f"C{k + 1:02d}" for k in range(n)]
    blocks = {iid: (0 if k < n // 2 else 1) for k, iid in enumerate(ids)}
    factors = rng.normal(0.0, 1.0, size=(n_days, 2)) * np.asarray(sigmas)
    returns = np.empty((n_days, n))
    for k, iid in enumerate(ids):
        returns[:, k] = factors[:, blocks[iid]] + rng.normal(0.0, noise, n_days)
    prices = 100.0 * np.cumprod(1.0 + returns / 100.0, axis=0)
    return ids, blocks, prices


def planted_signal_panel(
    seed: int = 0,
    first_year: int = 2002,
    years: int = 10,
    n_constituents: int = 26,
    calendar: str = "business",
    margin: float = 0.5,
) -> SyntheticPanel:
    """Panel of ``n_constituents + 4`` instruments with a recoverable target rule."""
    rng = np.random.default_rng(seed)
    cal = _calendar(first_year, years, calendar)
    n = len(cal)
    signs = _balanced_signs(rng, n)
    # log index moves three days at a time, so RDP-3 at j has sign signs[j] and |RDP-3| > margin
    steps = signs * (margin + np.abs(rng.normal(0.0, 1.5, n))) / 100.0
    log_idx = np.empty(n)
    log_idx[:3] = np.log(1000.0) + rng.normal(0.0, 0.005, 3)
    for j in range(3, n):
        log_idx[j] = log_idx[j - 3] + steps[j]
    target = np.empty(n)
    target[0] = 50.0
    moves = (0.2 + np.abs(rng.normal(0.0, 1.0, n - 1))) / 100.0
    target[1:] = 50.0 * np.exp(np.cumsum(signs[:-1] * moves))
    spx = 1000.0 * np.exp(np.cumsum(rng.normal(0.0, 0.012, n)))
    exr = 1200.0 * np.exp(np.cumsum(rng.normal(0.0, 0.006, n)))
    ids, blocks, cons = _constituents(rng, n, n_constituents)
    values = np.column_stack([np.exp(log_idx), spx, exr, target, cons])
    panel = AlignedPanel(cal, (INDEX, SP500, EXR, TARGET, *ids), values)
    return SyntheticPanel(panel, _config(ids, first_year), blocks)


def null_signal_panel(
    seed: int = 0,
    first_year: int = 2002,
    years: int = 13,
    n_constituents: int = 26,
    calendar: str = "daily",
    test_years: int = 4,
) -> SyntheticPanel:
    """Independent random walks; the target direction is an i.i.d. fair coin."""
    rng = np.random.default_rng(seed)
    cal = _calendar(first_year, years, calendar)
    n = len(cal)
    walks = 1000.0 * np.exp(np.cumsum(rng.normal(0.0, 0.01, size=(n, 3)), axis=0))
    coin = rng.choice([-1.0, 1.0], size=n - 1)
    target = np.empty(n)
    target[0] = 50.0
    target[1:] = 50.0 * np.exp(np.cumsum(coin * (0.2 + np.abs(rng.normal(0.0, 1.0, n - 1))) / 100.0))
    ids, blocks, cons = _constituents(rng, n, n_constituents)
    values = np.column_stack([walks, target, cons])
    panel = AlignedPanel(cal, (INDEX, SP500, EXR, TARGET, *ids), values)
    iterations = years - 3 - test_years + 1
    return SyntheticPanel(panel, _config(ids, first_year, 3, test_years, iterations), blocks)


def write_dataset(synth: SyntheticPanel, out_dir) -> Path:
    """One ``date,close`` CSV per instrument plus ``config.json``; returns the config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    panel = synth.panel
    sources = {}
    for iid in panel.instruments:
        buf = io.StringIO(newline="")
        write_price_csv(panel.series(iid), buf)
        atomic_write(out / f"{iid}.csv", buf.getvalue())
        sources[iid] = f"{iid}.csv"
    doc = dict(synth.config)
    doc["panel"] = {"sources": sources, "reference": INDEX}
    path = out / "config.json"
    atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="python -m pcasvm.synthetic", description=__doc__.split("\n\n")[0])
    parser.add_argument("--kind", choices=("planted", "null"), default="planted")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    make = planted_signal_panel if args.kind == "planted" else null_signal_panel
    print(write_dataset(make(seed=args.seed), args.out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
