"""Price ingestion, calendar alignment, RDP indicators and direction labels."""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import os
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentError, DomainError, ParseError, ValidationError


class Direction(enum.IntEnum):
    """Daily move direction; a flat close counts as UP."""

    DOWN = 0
    UP = 1


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _as_dates(values) -> np.ndarray:
    return np.asarray(values, dtype="datetime64[D]")


@dataclass(frozen=True)
class PriceSeries:
    instrument_id: str
    dates: np.ndarray
    closes: np.ndarray

    def __post_init__(self):
        dates = _frozen(_as_dates(self.dates))
        closes = _frozen(np.asarray(self.closes, dtype=np.float64))
        if dates.shape != closes.shape or dates.ndim != 1:
            raise ValidationError(f"{self.instrument_id}: dates and closes must be equal-length vectors")
        if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
            raise ValidationError(f"{self.instrument_id}: dates must be strictly increasing")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            raise ValidationError(f"{self.instrument_id}: closes must be finite and positive")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "closes", closes)

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class AlignedPanel:
    """Dense date-by-instrument price matrix on a single reference calendar."""

    calendar: np.ndarray
    instruments: tuple
    values: np.ndarray

    def __post_init__(self):
        calendar = _frozen(_as_dates(self.calendar))
        instruments = tuple(str(i) for i in self.instruments)
        values = _frozen(np.asarray(self.values, dtype=np.float64).reshape(len(calendar), len(instruments)))
        if len(set(instruments)) != len(instruments):
            raise ValidationError("duplicate instrument ids in panel")
        if len(calendar) > 1 and not np.all(calendar[1:] > calendar[:-1]):
            raise ValidationError("panel calendar must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValidationError("panel has missing or non-finite cells")
        if np.any(values <= 0):
            raise ValidationError("panel prices must be positive")
        object.__setattr__(self, "calendar", calendar)
        object.__setattr__(self, "instruments", instruments)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.calendar)

    def index(self, instrument_id: str) -> int:
        try:
            return self.instruments.index(instrument_id)
        except ValueError:
            raise DomainError(f"instrument {instrument_id!r} not in panel") from None

    def column(self, instrument_id: str) -> np.ndarray:
        return self.values[:, self.index(instrument_id)]

    def series(self, instrument_id: str) -> PriceSeries:
        return PriceSeries(instrument_id, self.calendar, self.column(instrument_id))

    def digest(self) -> str:
        """SHA-256 over calendar, instrument ids and raw float64 values."""
        h = hashlib.sha256()
        h.update(self.calendar.astype("datetime64[D]").astype(np.int64).tobytes())
        h.update("\x1f".join(self.instruments).encode())
        h.update(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        return h.hexdigest()

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["date", *self.instruments])
        for d, row in zip(self.calendar, self.values):
            writer.writerow([str(d), *(repr(float(x)) for x in row)])

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        self.write_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, raw) -> "AlignedPanel":
        text = _decode(raw)
        reader = csv.reader(io.StringIO(text, newline=""))
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty panel file", line=1) from None
        if not header or header[0].strip() != "date" or len(header) < 2:
            raise ParseError("panel header must be 'date' followed by instrument ids", line=1)
        ids = [h.strip() for h in header[1:]]
        dates, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(rec)}", line=lineno)
            dates.append(_parse_date(rec[0], lineno))
            try:
                rows.append([float(x) for x in rec[1:]])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
        return cls(np.array(dates, dtype="datetime64[D]"), tuple(ids), np.array(rows, dtype=np.float64).reshape(len(dates), len(ids)))


@dataclass(frozen=True)
class ReturnSeries:
    instrument_id: str
    lag: int
    dates: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class LabelSeries:
    """Direction of the move from each date to the next trading date."""

    instrument_id: str
    dates: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.values)


def _decode(raw) -> str:
    if hasattr(raw, "read"):
        raw = raw.read()
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    return raw


def _parse_date(text: str, lineno: int, date_format: str | None = None) -> date:
    text = text.strip()
    try:
        if date_format:
            return datetime.strptime(text, date_format).date()
        return date.fromisoformat(text)
    except ValueError:
        expected = date_format or "ISO-8601 YYYY-MM-DD"
        raise ParseError(f"bad date {text!r} (expected {expected})", line=lineno) from None


def parse_price_csv(raw, instrument_id: str, date_format: str | None = None) -> PriceSeries:
    """Parse a ``date,close`` CSV (bytes, str or binary file) into a PriceSeries.

    Rows may arrive in any order and are sorted ascending. Dates are
    ISO-8601 unless ``date_format`` (a ``strptime`` pattern) is given.
    """
    text = _decode(raw)
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["date", "close"]:
        raise ParseError("header must be 'date,close'", line=1)
    seen: dict[date, int] = {}
    closes = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) != 2:
            raise ParseError(f"expected 2 fields, got {len(rec)}", line=lineno)
        d = _parse_date(rec[0], lineno, date_format)
        try:
            close = float(rec[1])
        except ValueError:
            raise ParseError(f"bad price {rec[1]!r}", line=lineno) from None
        if not np.isfinite(close) or close <= 0:
            raise ValidationError(f"line {lineno}: price must be positive, got {rec[1].strip()}")
        if d in seen:
            raise ValidationError(f"line {lineno}: duplicate date {d} (first seen on line {seen[d]})")
        seen[d] = lineno
        closes.append((d, close))
    closes.sort(key=lambda pair: pair[0])
    return PriceSeries(
        instrument_id,
        np.array([d for d, _ in closes], dtype="datetime64[D]"),
        np.array([c for _, c in closes], dtype=np.float64),
    )


def read_price_csv(path, instrument_id: str | None = None, date_format: str | None = None) -> PriceSeries:
    path = Path(path)
    return parse_price_csv(path.read_bytes(), instrument_id or path.stem, date_format)


def write_price_csv(series: PriceSeries, fh) -> None:
    writer = csv.writer(fh, lineterminator="\r\n")
    writer.writerow(["date", "close"])
    for d, c in zip(series.dates, series.closes):
        writer.writerow([str(d), repr(float(c))])


def align_panel(
    series: Sequence[PriceSeries],
    reference: str,
    start=None,
    end=None,
) -> AlignedPanel:
    """Put every series on the reference instrument's trading calendar.

    The calendar is the reference's dates in ``[start, end)``. Other
    instruments lose dates not on that calendar and take the most recent
    prior close for calendar dates they lack. Back-filling is never done.
    """
    by_id = {s.instrument_id: s for s in series}
    if len(by_id) != len(series):
        raise ValidationError("duplicate instrument ids among input series")
    if reference not in by_id:
        raise DomainError(f"reference instrument {reference!r} not among the series")
    ref = by_id[reference]
    mask = np.ones(len(ref), dtype=bool)
    if start is not None:
        mask &= ref.dates >= np.datetime64(start, "D")
    if end is not None:
        mask &= ref.dates < np.datetime64(end, "D")
    calendar = ref.dates[mask]
    if len(calendar) == 0:
        raise DomainError("reference calendar is empty within the requested range")
    ids = [reference] + [s.instrument_id for s in series if s.instrument_id != reference]
    columns = []
    for iid in ids:
        s = by_id[iid]
        pos = np.searchsorted(s.dates, calendar, side="right") - 1
        if pos[0] < 0:
            raise AlignmentError(iid, str(calendar[0]))
        columns.append(s.closes[pos])
    return AlignedPanel(calendar, tuple(ids), np.column_stack(columns))


def rdp(prices, lag: int, dates=None, instrument_id: str = "") -> ReturnSeries:
    """Lagged relative difference in percent: ``(p[j] - p[j-lag]) / p[j-lag] * 100``."""
    prices = np.asarray(prices, dtype=np.float64)
    if lag < 1:
        raise DomainError(f"lag must be positive, got {lag}")
    if lag >= len(prices):
        raise DomainError(f"lag {lag} needs more than {len(prices)} prices")
    if np.any(prices <= 0):
        raise DomainError("prices must be positive")
    prev = prices[:-lag]
    values = (prices[lag:] - prev) / prev * 100.0
    out_dates = _as_dates(dates)[lag:] if dates is not None else np.arange(lag, len(prices))
    return ReturnSeries(instrument_id, lag, _frozen(out_dates), _frozen(values))


def rdp_padded(prices, lag: int) -> np.ndarray:
    """RDP aligned to the input index, NaN where the lag reaches before the start."""
    prices = np.asarray(prices, dtype=np.float64)
    out = np.full(len(prices), np.nan)
    if lag < len(prices):
        out[lag:] = rdp(prices, lag).values
    return out


def direction_labels(prices, dates=None, instrument_id: str = "") -> LabelSeries:
    """UP where the next close is >= today's close, else DOWN."""
    prices = np.asarray(prices, dtype=np.float64)
    if len(prices) < 2:
        raise DomainError("direction labels need at least two prices")
    values = np.where(prices[1:] >= prices[:-1], Direction.UP, Direction.DOWN).astype(np.int8)
    out_dates = _as_dates(dates)[:-1] if dates is not None else np.arange(len(prices) - 1)
    return LabelSeries(instrument_id, _frozen(out_dates), _frozen(values))


def atomic_write(path, data, mode: str = "w") -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        if "b" in mode:
            with open(tmp, mode) as fh:
                fh.write(data)
        else:
            with open(tmp, mode, encoding="utf-8", newline="") as fh:
                fh.write(data)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def load_series(paths: Iterable, date_format: str | None = None) -> list[PriceSeries]:
    return [read_price_csv(p, date_format=date_format) for p in paths]
