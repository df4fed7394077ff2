"""End-to-end orchestration shared by the CLI commands: sentiment model
training, daily-index scoring, forecaster training/evaluation and the
with/without-sentiment comparison."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Mapping, Sequence

import numpy as np

from .config import PipelineConfig
from .data import (
    AlignedSeries,
    Candle,
    FeatureScaler,
    SENTIMENT_COL,
    TweetRecord,
    WindowedDataset,
    align_daily,
    chronological_split,
    make_windows,
)
from .forest import RandomForestSentimentClassifier, daily_sentiment_index, score_tweets
from .metrics import (
    ClassificationReport,
    ConfusionMatrix,
    RegressionReport,
    classification_report,
    confusion,
    regression_report,
)
from .network import FusionNetwork, FusionForecaster, predict_series
from .text import TfidfVectorizer, tokenize

VARIANTS = ("with_nlp", "without_nlp")


@dataclass
class SentimentModel:
    vectorizer: TfidfVectorizer
    forest: RandomForestSentimentClassifier
    confusion: ConfusionMatrix
    report: ClassificationReport


def train_sentiment(tweets: Sequence[TweetRecord], cfg: PipelineConfig) -> SentimentModel:
    """Fit the TF-IDF + forest classifier on a stratified 80/20 holdout of
    the labeled tweets and report holdout confusion metrics."""
    labeled = [t for t in tweets if t.label is not None]
    if len(labeled) < 10:
        raise ValueError(f"need at least 10 labeled tweets, got {len(labeled)}")
    labels = {t.label for t in labeled}
    if labels != {1, -1}:
        raise ValueError("labeled corpus must contain both classes")
    rng = np.random.default_rng(cfg.seed)
    train_idx: list[int] = []
    hold_idx: list[int] = []
    for cls in (1, -1):
        idx = [i for i, t in enumerate(labeled) if t.label == cls]
        idx = list(rng.permutation(idx))
        n_hold = max(1, int(round(len(idx) * 0.2)))
        hold_idx += idx[:n_hold]
        train_idx += idx[n_hold:]
    tokens = [tokenize(t.text) for t in labeled]
    sc = cfg.sentiment
    vectorizer = TfidfVectorizer(min_df=sc.min_df, max_terms=sc.max_terms)
    X_train = vectorizer.fit_transform([tokens[i] for i in train_idx])
    y_train = np.array([labeled[i].label for i in train_idx])
    forest = RandomForestSentimentClassifier(
        n_trees=sc.n_trees,
        max_depth=sc.max_depth,
        min_samples_leaf=sc.min_samples_leaf,
        features_per_split=sc.features_per_split,
        criterion=sc.criterion,
        seed=cfg.seed,
    ).fit(X_train, y_train)
    X_hold = vectorizer.transform([tokens[i] for i in hold_idx])
    y_hold = np.array([labeled[i].label for i in hold_idx])
    cm = confusion(forest.predict(X_hold), y_hold)
    return SentimentModel(vectorizer, forest, cm, classification_report(cm))


def build_daily_index(
    vectorizer: TfidfVectorizer,
    forest: RandomForestSentimentClassifier,
    tweets: Sequence[TweetRecord],
) -> dict[date, int]:
    return daily_sentiment_index(score_tweets(forest, vectorizer, tweets))


def _zero_sentiment(series: AlignedSeries) -> AlignedSeries:
    feats = series.features.copy()
    feats[:, SENTIMENT_COL] = 0.0
    return AlignedSeries(series.dates, feats)


def build_variant_datasets(
    train: AlignedSeries,
    test: AlignedSeries,
    variant: str,
    window_length: int,
    horizon: int,
) -> tuple[FeatureScaler, WindowedDataset, WindowedDataset]:
    """Scale (fit on train only) and window both splits for one ablation
    variant; ``without_nlp`` zeroes the sentiment column first, keeping the
    architecture and parameter count identical across variants."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if variant == "without_nlp":
        train, test = _zero_sentiment(train), _zero_sentiment(test)
    scaler = FeatureScaler().fit(train.features)
    train_ds = make_windows(scaler.transform_series(train), window_length, horizon)
    test_ds = make_windows(scaler.transform_series(test), window_length, horizon)
    return scaler, train_ds, test_ds


@dataclass
class ForecasterArtifacts:
    scaler: FeatureScaler
    network: FusionNetwork
    loss_history: list[float]
    variant: str


def train_forecaster(
    candles: Sequence[Candle],
    daily_index: Mapping[date, int],
    cfg: PipelineConfig,
    variant: str = "with_nlp",
) -> ForecasterArtifacts:
    """Align, split, scale and train the fusion network on the train split."""
    series = align_daily(candles, daily_index)
    train_series, _ = chronological_split(series, cfg.split_fraction)
    nc = cfg.network
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if variant == "without_nlp":
        train_series = _zero_sentiment(train_series)
    scaler = FeatureScaler().fit(train_series.features)
    train_ds = make_windows(
        scaler.transform_series(train_series), nc.window_length, nc.horizon
    )
    forecaster = FusionForecaster(
        hidden_size=nc.hidden_size,
        n_filters=nc.n_filters,
        kernel_half_width=nc.kernel_half_width,
        window_length=nc.window_length,
        activation=nc.activation,
        lr=nc.lr,
        batch_size=nc.batch_size,
        epochs=nc.epochs,
        seed=cfg.seed,
    ).fit(train_ds.inputs, train_ds.targets)
    return ForecasterArtifacts(scaler, forecaster.net_, forecaster.loss_history_, variant)


@dataclass
class EvaluationResult:
    report: RegressionReport | None
    rows: list[tuple[date, float, float]]  # (date, actual, predicted) in price space


def evaluate_network(
    network: FusionNetwork,
    scaler: FeatureScaler,
    series: AlignedSeries,
    variant: str,
    window_length: int,
    horizon: int,
    with_metrics: bool = True,
) -> EvaluationResult:
    """Predict over the given series and report metrics in price space."""
    if variant == "without_nlp":
        series = _zero_sentiment(series)
    ds = make_windows(scaler.transform_series(series), window_length, horizon)
    preds_scaled = predict_series(network, ds.inputs)
    preds = scaler.inverse_close(preds_scaled)
    actual = scaler.inverse_close(ds.targets)
    rows = list(zip(ds.target_dates, actual.tolist(), preds.tolist()))
    report = regression_report(preds, actual) if with_metrics else None
    return EvaluationResult(report, rows)


def compare(
    candles: Sequence[Candle],
    tweets: Sequence[TweetRecord],
    cfg: PipelineConfig,
) -> dict:
    """Run the full pipeline for both ablation variants on a shared
    sentiment model, split and seed; returns the comparison report."""
    sentiment = train_sentiment(tweets, cfg)
    index = build_daily_index(sentiment.vectorizer, sentiment.forest, tweets)
    series = align_daily(candles, index)
    train_series, test_series = chronological_split(series, cfg.split_fraction)
    nc = cfg.network
    result: dict = {
        "seed": cfg.seed,
        "config": cfg.as_dict(),
        "sentiment_holdout": {
            "confusion": sentiment.confusion.as_dict(),
            **sentiment.report.as_dict(),
        },
        "variants": {},
    }
    test_dates: tuple[date, ...] | None = None
    for variant in VARIANTS:
        scaler, train_ds, test_ds = build_variant_datasets(
            train_series, test_series, variant, nc.window_length, nc.horizon
        )
        forecaster = FusionForecaster(
            hidden_size=nc.hidden_size,
            n_filters=nc.n_filters,
            kernel_half_width=nc.kernel_half_width,
            window_length=nc.window_length,
            activation=nc.activation,
            lr=nc.lr,
            batch_size=nc.batch_size,
            epochs=nc.epochs,
            seed=cfg.seed,
        ).fit(train_ds.inputs, train_ds.targets)
        preds = scaler.inverse_close(forecaster.predict(test_ds.inputs))
        actual = scaler.inverse_close(test_ds.targets)
        if test_dates is None:
            test_dates = test_ds.target_dates
        elif test_dates != test_ds.target_dates:
            raise AssertionError("variants evaluated on different test dates")
        report = regression_report(preds, actual)
        result["variants"][variant] = {
            "metrics": report.as_dict(),
            "predictions": [
                {"date": d.isoformat(), "actual": a, "predicted": p}
                for d, a, p in zip(test_ds.target_dates, actual.tolist(), preds.tolist())
            ],
        }
    return result
