"""Tweet-sentiment-augmented stock price forecasting.

TF-IDF + random-forest tweet classification feeds a daily sentiment index
that is fused with OHLC candle windows and forecast by a hybrid
Conv1D + LSTM network trained with analytic backpropagation.
"""

from .bundle import ModelBundle, bundle_checksum, load_bundle, save_bundle
from .config import NetworkConfig, PipelineConfig, SentimentConfig, load_config
from .data import (
    AlignedSeries,
    Candle,
    FeatureScaler,
    TweetRecord,
    WindowedDataset,
    align_daily,
    chronological_split,
    load_candles,
    load_tweets,
    make_windows,
)
from .forest import (
    RandomForestSentimentClassifier,
    best_split,
    daily_sentiment_index,
    entropy,
    gini,
    grow_tree,
    score_tweets,
)
from .metrics import (
    ClassificationReport,
    ConfusionMatrix,
    RegressionReport,
    classification_report,
    confusion,
    regression_report,
)
from .network import (
    AdamOptimizer,
    FusionForecaster,
    FusionNetwork,
    TrainConfig,
    TrainingDivergedError,
    backward,
    forward,
    predict_series,
    train,
)
from .pipeline import build_daily_index, compare, train_forecaster, train_sentiment
from .synth import SynthSpec, generate_labeled_corpus, generate_synthetic
from .text import TfidfVectorizer, tokenize

__all__ = [
    "AdamOptimizer", "AlignedSeries", "Candle", "ClassificationReport",
    "ConfusionMatrix", "FeatureScaler", "FusionForecaster", "FusionNetwork",
    "ModelBundle", "NetworkConfig", "PipelineConfig", "RandomForestSentimentClassifier",
    "RegressionReport", "SentimentConfig", "SynthSpec", "TfidfVectorizer",
    "TrainConfig", "TrainingDivergedError", "TweetRecord", "WindowedDataset",
    "align_daily", "backward", "best_split", "build_daily_index", "bundle_checksum",
    "chronological_split", "classification_report", "compare", "confusion",
    "daily_sentiment_index", "entropy", "forward", "generate_labeled_corpus",
    "generate_synthetic", "gini", "grow_tree", "load_bundle", "load_candles",
    "load_config", "load_tweets", "make_windows", "predict_series",
    "regression_report", "save_bundle", "score_tweets", "tokenize", "train",
    "train_forecaster", "train_sentiment",
]
