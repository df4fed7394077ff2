"""CART decision trees with Gini/entropy splits, a bootstrap-bagged forest
for +1/-1 tweet sentiment, and daily sentiment-index aggregation."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .data import TweetRecord
from .text import TfidfVectorizer, tokenize

LABELS = (-1, 1)


def gini(class_counts: Mapping[int, int]) -> float:
    """Gini impurity 1 - sum(p_i^2)."""
    total = sum(class_counts.values())
    if total == 0:
        raise ValueError("gini of an empty node")
    return 1.0 - sum((c / total) ** 2 for c in class_counts.values())


def entropy(class_counts: Mapping[int, int]) -> float:
    """Shannon entropy in bits, with 0*log(0) := 0."""
    total = sum(class_counts.values())
    if total == 0:
        raise ValueError("entropy of an empty node")
    h = 0.0
    for c in class_counts.values():
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def _impurity_from_counts(counts: np.ndarray, criterion: str) -> np.ndarray:
    """Vectorized two-class impurity; ``counts`` has shape (..., 2)."""
    total = counts.sum(axis=-1)
    p = counts / np.maximum(total, 1)[..., None]
    if criterion == "gini":
        return 1.0 - (p**2).sum(axis=-1)
    if criterion == "entropy":
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
        return -(p * logp).sum(axis=-1)
    raise ValueError(f"unknown criterion {criterion!r}")


@dataclass
class SplitNode:
    feature: int
    threshold: float
    left: "SplitNode | LeafNode"
    right: "SplitNode | LeafNode"


@dataclass
class LeafNode:
    counts: dict[int, int]  # label -> training-sample count
    label: int


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float  # count-weighted impurity decrease


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    candidate_features: Sequence[int],
    criterion: str = "gini",
    min_leaf: int = 1,
) -> Optional[Split]:
    """Exhaustive scan over candidate features and midpoints between
    consecutive distinct sorted values; maximizes the impurity decrease
    relative to the parent node. Ties resolve to the lower feature index,
    then the lower threshold. Returns None when no split helps.
    """
    n = len(y)
    if n < 2:
        return None
    y01 = (y > 0).astype(np.int64)
    parent_counts = np.array([n - y01.sum(), y01.sum()], dtype=np.float64)
    parent_imp = _impurity_from_counts(parent_counts, criterion)
    best: Optional[Split] = None
    for f in sorted(set(int(f) for f in candidate_features)):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y01[order]
        # boundaries between distinct consecutive values
        distinct = np.nonzero(xs[1:] > xs[:-1])[0]  # split after index i
        if distinct.size == 0:
            continue
        pos_cum = np.cumsum(ys)
        n_left = distinct + 1
        n_right = n - n_left
        valid = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        distinct = distinct[valid]
        n_left = n_left[valid]
        n_right = n_right[valid]
        pos_left = pos_cum[distinct]
        left_counts = np.stack([n_left - pos_left, pos_left], axis=-1).astype(np.float64)
        right_counts = parent_counts - left_counts
        child_imp = (
            n_left * _impurity_from_counts(left_counts, criterion)
            + n_right * _impurity_from_counts(right_counts, criterion)
        ) / n
        gains = parent_imp - child_imp
        i = int(np.argmax(gains))  # first max -> lowest threshold
        if gains[i] > 1e-12 and (best is None or gains[i] > best.gain + 1e-12):
            thr = 0.5 * (xs[distinct[i]] + xs[distinct[i] + 1])
            best = Split(f, float(thr), float(gains[i]))
    return best


def _make_leaf(y: np.ndarray) -> LeafNode:
    n_pos = int((y > 0).sum())
    n_neg = len(y) - n_pos
    label = 1 if n_pos >= n_neg else -1  # ties resolve to +1
    return LeafNode({1: n_pos, -1: n_neg}, label)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int,
    min_samples_leaf: int,
    features_per_split: int,
    criterion: str,
    rng: np.random.Generator,
) -> "SplitNode | LeafNode":
    """Recursive CART on +1/-1 labels; at each node ``features_per_split``
    candidate features are drawn without replacement from ``rng``."""
    if len(y) == 0:
        raise ValueError("empty sample set")
    n_features = X.shape[1]
    k = min(features_per_split, n_features)

    def build(idx: np.ndarray, depth: int) -> "SplitNode | LeafNode":
        yi = y[idx]
        if (
            depth >= max_depth
            or len(idx) < 2 * min_samples_leaf
            or len(idx) < 2
            or np.all(yi == yi[0])
        ):
            return _make_leaf(yi)
        feats = rng.choice(n_features, size=k, replace=False)
        split = best_split(X[idx], yi, feats, criterion, min_leaf=min_samples_leaf)
        if split is None:
            return _make_leaf(yi)
        go_left = X[idx, split.feature] <= split.threshold
        return SplitNode(
            split.feature,
            split.threshold,
            build(idx[go_left], depth + 1),
            build(idx[~go_left], depth + 1),
        )

    return build(np.arange(len(y)), 0)


def tree_predict(node: "SplitNode | LeafNode", x: np.ndarray) -> int:
    while isinstance(node, SplitNode):
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.label


class RandomForestSentimentClassifier(BaseEstimator, ClassifierMixin):
    """Bagged ensemble of CART trees predicting +1/-1 sentiment.

    Each tree trains on an n-sample bootstrap resample drawn from an
    independent rng stream seeded by (seed, tree index), so fitting is
    deterministic and order-independent across trees. Prediction is the
    sign of the mean tree vote, ties going to +1.
    """

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int = 12,
        min_samples_leaf: int = 2,
        features_per_split: int | None = None,
        criterion: str = "gini",
        seed: int = 0,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.features_per_split = features_per_split
        self.criterion = criterion
        self.seed = seed

    def _validate_params(self):
        if self.n_trees < 1 or self.max_depth < 0 or self.min_samples_leaf < 1:
            raise ValueError("n_trees and min_samples_leaf must be >= 1, max_depth >= 0")
        if self.criterion not in ("gini", "entropy"):
            raise ValueError(f"criterion must be 'gini' or 'entropy', got {self.criterion!r}")

    def fit(self, X: np.ndarray, y: Sequence[int]) -> "RandomForestSentimentClassifier":
        self._validate_params()
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or len(X) != len(y):
            raise ValueError("X must be 2-D with one label per row")
        if len(y) < 2:
            raise ValueError("need at least 2 samples")
        if not set(np.unique(y)) <= {-1, 1}:
            raise ValueError("labels must be +1 or -1")
        if len(np.unique(y)) < 2:
            raise ValueError("training set contains a single class")
        n, V = X.shape
        k = self.features_per_split or math.ceil(math.sqrt(V))
        self.n_features_ = V
        self.trees_ = []
        for i in range(self.n_trees):
            rng = np.random.default_rng([self.seed, i])
            boot = rng.integers(0, n, size=n)
            self.trees_.append(
                grow_tree(
                    X[boot], y[boot],
                    self.max_depth, self.min_samples_leaf, k, self.criterion, rng,
                )
            )
        return self

    def _check_x(self, x: np.ndarray) -> np.ndarray:
        if not hasattr(self, "trees_"):
            raise NotFittedError("forest is not fitted")
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got {x.shape[-1]}")
        return x

    def predict_one(self, x: np.ndarray) -> int:
        x = self._check_x(x)
        mean_vote = np.mean([tree_predict(t, x) for t in self.trees_])
        return 1 if mean_vote >= 0 else -1

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = self._check_x(X)
        return np.array([self.predict_one(row) for row in X], dtype=np.int64)

    # -- persistence -------------------------------------------------------

    def get_state(self) -> dict:
        def node_state(node):
            if isinstance(node, LeafNode):
                return {"counts": {str(k): v for k, v in node.counts.items()}, "label": node.label}
            return {
                "feature": node.feature,
                "threshold": node.threshold,
                "left": node_state(node.left),
                "right": node_state(node.right),
            }

        return {
            "params": self.get_params(),
            "n_features": self.n_features_,
            "trees": [node_state(t) for t in self.trees_],
        }

    @classmethod
    def from_state(cls, state: dict) -> "RandomForestSentimentClassifier":
        def build(d):
            if "label" in d:
                return LeafNode({int(k): v for k, v in d["counts"].items()}, d["label"])
            return SplitNode(d["feature"], d["threshold"], build(d["left"]), build(d["right"]))

        clf = cls(**state["params"])
        clf.n_features_ = state["n_features"]
        clf.trees_ = [build(t) for t in state["trees"]]
        return clf


def score_tweets(
    forest: RandomForestSentimentClassifier,
    vectorizer: TfidfVectorizer,
    tweets: Sequence[TweetRecord],
) -> list[tuple[date, int]]:
    """Classify each tweet's text into a +1/-1 score, preserving order."""
    return [
        (t.date, forest.predict_one(vectorizer.vectorize(tokenize(t.text))))
        for t in tweets
    ]


def daily_sentiment_index(scored: Sequence[tuple[date, int]]) -> dict[date, int]:
    """Sum per-tweet +1/-1 scores per calendar day."""
    index: dict[date, int] = defaultdict(int)
    for d, s in scored:
        index[d] += s
    return dict(index)
