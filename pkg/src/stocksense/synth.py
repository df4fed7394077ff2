"""Seeded synthetic market data: a geometric random-walk price path with
planted sentiment "events" whose polarity shifts the next day's return,
plus matching polarity-worded tweets. Used for desk-scale verification in
place of a real tweet corpus."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .data import Candle, TweetRecord

POSITIVE_WORDS = ("gain", "rally", "surge", "beat", "record", "upgrade")
NEGATIVE_WORDS = ("loss", "drop", "plunge", "miss", "lawsuit", "downgrade")
FILLER_WORDS = (
    "stock", "shares", "market", "today", "quarter", "earnings", "price",
    "trading", "volume", "report", "analyst", "forecast",
)


@dataclass(frozen=True)
class SynthSpec:
    n_days: int = 400
    shock_prob: float = 0.15
    shock_magnitude: float = 0.02
    noise: float = 0.005
    tweets_per_event: int = 5
    start_price: float = 100.0
    start_date: date = date(2020, 1, 6)

    def validate(self):
        if self.n_days < 50:
            raise ValueError("n_days must be >= 50")
        if not 0.0 <= self.shock_prob <= 1.0:
            raise ValueError("shock_prob must be in [0, 1]")
        if self.shock_magnitude < 0 or self.noise <= 0:
            raise ValueError("shock_magnitude must be >= 0 and noise > 0")
        if self.tweets_per_event < 1 or self.start_price <= 0:
            raise ValueError("tweets_per_event and start_price must be positive")


def _trading_days(start: date, n: int) -> list[date]:
    days = []
    d = start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def _tweet_text(polarity: int, rng: np.random.Generator) -> str:
    words = POSITIVE_WORDS if polarity > 0 else NEGATIVE_WORDS
    n_polar = int(rng.integers(1, 3))
    n_fill = int(rng.integers(2, 6))
    chosen = list(rng.choice(words, size=n_polar)) + list(rng.choice(FILLER_WORDS, size=n_fill))
    rng.shuffle(chosen)
    return " ".join(chosen)


def generate_synthetic(spec: SynthSpec, seed: int = 0) -> tuple[list[Candle], list[TweetRecord]]:
    """Generate aligned candles and labeled tweets.

    On each event day (probability ``shock_prob``) a polarity is drawn,
    ``tweets_per_event`` tweets with that polarity's planted words are
    emitted, and the *next* trading day's log-return is shifted by
    polarity * shock_magnitude. With zero magnitude the tweets carry no
    predictive signal (null control).
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    days = _trading_days(spec.start_date, spec.n_days)
    candles: list[Candle] = []
    tweets: list[TweetRecord] = []
    close = spec.start_price
    pending_shock = 0.0
    for d in days:
        open_ = close
        ret = rng.normal(0.0, spec.noise) + pending_shock
        close = open_ * float(np.exp(ret))
        hi = max(open_, close) * (1.0 + float(rng.uniform(0.0, 0.004)))
        lo = min(open_, close) * (1.0 - float(rng.uniform(0.0, 0.004)))
        candles.append(Candle(d, open_, hi, lo, close))
        pending_shock = 0.0
        if rng.random() < spec.shock_prob:
            polarity = 1 if rng.random() < 0.5 else -1
            pending_shock = polarity * spec.shock_magnitude
            for _ in range(spec.tweets_per_event):
                tweets.append(TweetRecord(d, _tweet_text(polarity, rng), polarity))
    return candles, tweets


def generate_labeled_corpus(
    n_per_class: int, seed: int = 0, start_date: date = date(2020, 1, 6)
) -> list[TweetRecord]:
    """Balanced planted-signal corpus for sentiment-classifier checks."""
    rng = np.random.default_rng(seed)
    days = _trading_days(start_date, max(10, n_per_class // 5))
    tweets = []
    for label in (1, -1):
        for _ in range(n_per_class):
            d = days[int(rng.integers(0, len(days)))]
            tweets.append(TweetRecord(d, _tweet_text(label, rng), label))
    return tweets
