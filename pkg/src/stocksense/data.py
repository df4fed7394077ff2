"""Domain types and data plumbing: candle/tweet ingestion, daily alignment,
chronological splitting, min-max scaling and sliding-window construction."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Iterable, Mapping

import numpy as np
from sklearn.base import BaseEstimator

FEATURE_NAMES = ("open", "high", "low", "close", "sentiment")
N_FEATURES = len(FEATURE_NAMES)
CLOSE_COL = 3
SENTIMENT_COL = 4


@dataclass(frozen=True)
class Candle:
    """One daily OHLC bar."""

    date: date
    open: float
    high: float
    low: float
    close: float

    def __post_init__(self):
        for name in ("open", "high", "low", "close"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be a finite positive price, got {v}")
        if not (self.low <= self.open <= self.high and self.low <= self.close <= self.high):
            raise ValueError(
                f"OHLC invariant violated on {self.date}: "
                f"o={self.open} h={self.high} l={self.low} c={self.close}"
            )


@dataclass(frozen=True)
class TweetRecord:
    """A dated tweet, optionally carrying a +1/-1 sentiment label."""

    date: date
    text: str
    label: int | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("empty text")
        if self.label is not None and self.label not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.label}")


@dataclass(frozen=True)
class AlignedSeries:
    """Candles joined with the daily sentiment index, one row per trading day.

    ``features`` has one row per date with columns (open, high, low, close,
    sentiment_index); dates are strictly increasing.
    """

    dates: tuple[date, ...]
    features: np.ndarray  # (n, 5) float64

    def __post_init__(self):
        if self.features.shape != (len(self.dates), N_FEATURES):
            raise ValueError("features shape does not match dates")
        if any(a >= b for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class WindowedDataset:
    """Sliding windows over a (scaled) aligned series.

    ``inputs`` is (n_windows, L, 5); ``targets`` is the scaled close at
    offset L + horizon - 1 from each window's start.
    """

    inputs: np.ndarray
    targets: np.ndarray
    window_length: int
    horizon: int
    target_dates: tuple[date, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.targets)


def _open_text(source) -> IO[str]:
    if isinstance(source, (str, bytes)) and not isinstance(source, bytes):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.RawIOBase) or isinstance(source, io.BufferedIOBase):
        return io.TextIOWrapper(source, encoding="utf-8", newline="")
    return source  # already a text stream


def load_candles(source) -> list[Candle]:
    """Parse a ``date,open,high,low,close`` CSV into candles sorted by date.

    Rejects malformed rows (with line number), duplicate dates and OHLC
    invariant violations.
    """
    fh = _open_text(source)
    reader = csv.reader(fh)
    header = next(reader, None)
    if header != ["date", "open", "high", "low", "close"]:
        raise ValueError(f"bad candle header: {header}")
    candles: list[Candle] = []
    seen: set[date] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ValueError(f"line {lineno}: expected 5 fields, got {len(row)}")
        try:
            d = date.fromisoformat(row[0])
            o, h, l, c = (float(v) for v in row[1:])
        except ValueError as e:
            raise ValueError(f"line {lineno}: {e}") from None
        if d in seen:
            raise ValueError(f"line {lineno}: duplicate date {d}")
        seen.add(d)
        try:
            candles.append(Candle(d, o, h, l, c))
        except ValueError as e:
            raise ValueError(f"line {lineno}: {e}") from None
    candles.sort(key=lambda x: x.date)
    return candles


def load_tweets(source) -> list[TweetRecord]:
    """Parse a ``date,text,label`` CSV (RFC-4180 quoting, label may be empty)."""
    fh = _open_text(source)
    reader = csv.reader(fh)
    header = next(reader, None)
    if header != ["date", "text", "label"]:
        raise ValueError(f"bad tweet header: {header}")
    tweets: list[TweetRecord] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ValueError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            d = date.fromisoformat(row[0])
            label = int(row[2]) if row[2].strip() else None
            tweets.append(TweetRecord(d, row[1], label))
        except ValueError as e:
            raise ValueError(f"line {lineno}: {e}") from None
    return tweets


def align_daily(candles: Iterable[Candle], daily_index: Mapping[date, int]) -> AlignedSeries:
    """Join candles with the daily sentiment index; dates without scored
    tweets get index 0, index entries on non-trading days are dropped."""
    candles = list(candles)
    dates = tuple(c.date for c in candles)
    feats = np.empty((len(candles), N_FEATURES), dtype=np.float64)
    for i, c in enumerate(candles):
        feats[i] = (c.open, c.high, c.low, c.close, float(daily_index.get(c.date, 0)))
    return AlignedSeries(dates, feats)


def chronological_split(series: AlignedSeries, train_fraction: float) -> tuple[AlignedSeries, AlignedSeries]:
    """Split the first floor(n * fraction) rows off as the training set,
    keeping time order."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(series)
    if n == 0:
        raise ValueError("empty series")
    k = int(n * train_fraction)
    if k == 0 or k == n:
        raise ValueError(f"split fraction {train_fraction} leaves an empty side for n={n}")
    return (
        AlignedSeries(series.dates[:k], series.features[:k].copy()),
        AlignedSeries(series.dates[k:], series.features[k:].copy()),
    )


class FeatureScaler(BaseEstimator):
    """Per-column min-max scaler to [0, 1], fitted on training rows only.

    Constant columns map to 0 (scale treated as 1 to avoid division by
    zero); ``inverse_transform`` restores the original values exactly up
    to floating-point rounding.
    """

    def fit(self, X: np.ndarray) -> "FeatureScaler":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("fit requires a non-empty 2-D array")
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        rng = self.max_ - self.min_
        self.scale_ = np.where(rng > 0, rng, 1.0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.min_) / self.scale_

    def inverse_transform(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) * self.scale_ + self.min_

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)

    def transform_series(self, series: AlignedSeries) -> AlignedSeries:
        return AlignedSeries(series.dates, self.transform(series.features))

    def inverse_close(self, scaled_close: np.ndarray) -> np.ndarray:
        """Map scaled close values back to price space."""
        return np.asarray(scaled_close) * self.scale_[CLOSE_COL] + self.min_[CLOSE_COL]


def make_windows(series: AlignedSeries, window_length: int, horizon: int = 1) -> WindowedDataset:
    """Build stride-1 sliding windows; the target of the window starting at
    t is the close at row t + window_length + horizon - 1."""
    if window_length < 1 or horizon < 1:
        raise ValueError("window_length and horizon must be positive")
    n = len(series)
    n_windows = n - window_length - horizon + 1
    if n_windows < 1:
        raise ValueError(
            f"series too short: {n} rows < window {window_length} + horizon {horizon}"
        )
    inputs = np.stack([series.features[t : t + window_length] for t in range(n_windows)])
    target_rows = np.arange(n_windows) + window_length + horizon - 1
    targets = series.features[target_rows, CLOSE_COL].copy()
    target_dates = tuple(series.dates[r] for r in target_rows)
    return WindowedDataset(inputs, targets, window_length, horizon, target_dates)
