"""Pipeline configuration with strict JSON loading: unknown keys are
rejected so typos never silently fall back to defaults."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class SentimentConfig:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 2
    features_per_split: int | None = None
    criterion: str = "gini"
    min_df: int = 2
    max_terms: int = 5000

    def validate(self):
        if self.n_trees < 1 or self.min_samples_leaf < 1 or self.max_depth < 0:
            raise ValueError("forest counts must be positive")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")
        if self.criterion not in ("gini", "entropy"):
            raise ValueError(f"criterion must be 'gini' or 'entropy', got {self.criterion!r}")
        if self.min_df < 1 or self.max_terms < 1:
            raise ValueError("min_df and max_terms must be >= 1")


@dataclass(frozen=True)
class NetworkConfig:
    hidden_size: int = 32
    n_filters: int = 16
    kernel_half_width: int = 2
    window_length: int = 10
    horizon: int = 1
    activation: str = "relu"
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 200

    def validate(self):
        if min(self.hidden_size, self.n_filters, self.window_length, self.horizon,
               self.batch_size, self.epochs) < 1 or self.kernel_half_width < 0:
            raise ValueError("network sizes must be positive")
        if self.window_length < 2 * self.kernel_half_width + 1:
            raise ValueError("window_length must cover the convolution kernel")
        if self.activation not in ("relu", "tanh", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


@dataclass(frozen=True)
class PipelineConfig:
    candles: str | None = None
    tweets: str | None = None
    split_fraction: float = 0.8
    seed: int = 0
    sentiment: SentimentConfig = field(default_factory=SentimentConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)

    def validate(self):
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must be in (0, 1)")
        self.sentiment.validate()
        self.network.validate()

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build(cls, data: dict, path: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ValueError(f"unknown config key(s) at {path}: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        if name in ("sentiment", "network"):
            sub = SentimentConfig if name == "sentiment" else NetworkConfig
            if not isinstance(value, dict):
                raise ValueError(f"{path}{name} must be an object")
            kwargs[name] = _build(sub, value, f"{path}{name}.")
        else:
            kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> PipelineConfig:
    cfg = _build(PipelineConfig, data, "")
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config root must be a JSON object")
    return config_from_dict(data)
