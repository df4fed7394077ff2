"""Regression metrics for the forecaster and classification metrics for
the sentiment model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class RegressionReport:
    mse: float
    rmse: float
    r_squared: float  # NaN when undefined (constant actuals)
    msle: float
    n: int
    r_squared_defined: bool = True

    def as_dict(self) -> dict:
        return {
            "mse": self.mse,
            "rmse": self.rmse,
            "r_squared": None if not self.r_squared_defined else self.r_squared,
            "r_squared_defined": self.r_squared_defined,
            "msle": self.msle,
            "n": self.n,
        }


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with +1 as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    precision_degenerate: bool = False
    recall_degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "precision_degenerate": self.precision_degenerate,
            "recall_degenerate": self.recall_degenerate,
        }


def regression_report(pred: Sequence[float], actual: Sequence[float]) -> RegressionReport:
    """MSE, RMSE (= sqrt of the computed MSE), R^2 about the mean of the
    actuals, and MSLE on log1p-transformed values.

    R^2 is undefined for constant actuals and reported as NaN with
    ``r_squared_defined=False``; predictions are clamped at -1 + 1e-9 for
    the MSLE log.
    """
    p = np.asarray(pred, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {a.shape}")
    if p.size == 0:
        raise ValueError("empty input")
    if np.any(a <= -1.0):
        raise ValueError("actual values must be > -1 for MSLE")
    mse = float(np.mean((p - a) ** 2))
    rmse = math.sqrt(mse)
    ss_res = float(np.sum((a - p) ** 2))
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        r2, defined = float("nan"), False
    else:
        r2, defined = 1.0 - ss_res / ss_tot, True
    msle = float(np.mean((np.log1p(np.maximum(p, -1.0 + 1e-9)) - np.log1p(a)) ** 2))
    return RegressionReport(mse, rmse, r2, msle, int(p.size), defined)


def confusion(pred_labels: Sequence[int], true_labels: Sequence[int]) -> ConfusionMatrix:
    p = np.asarray(pred_labels, dtype=np.int64)
    t = np.asarray(true_labels, dtype=np.int64)
    if p.shape != t.shape:
        raise ValueError("length mismatch")
    if p.size == 0:
        raise ValueError("empty input")
    for arr in (p, t):
        if not set(np.unique(arr)) <= {-1, 1}:
            raise ValueError("labels must be +1 or -1")
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (t == 1))),
        fp=int(np.sum((p == 1) & (t == -1))),
        tn=int(np.sum((p == -1) & (t == -1))),
        fn=int(np.sum((p == -1) & (t == 1))),
    )


def classification_report(cm: ConfusionMatrix) -> ClassificationReport:
    """Accuracy, precision, recall, F1; zero-denominator precision/recall
    are reported as 0 and flagged degenerate."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    prec_deg = (cm.tp + cm.fp) == 0
    rec_deg = (cm.tp + cm.fn) == 0
    precision = 0.0 if prec_deg else cm.tp / (cm.tp + cm.fp)
    recall = 0.0 if rec_deg else cm.tp / (cm.tp + cm.fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return ClassificationReport(accuracy, precision, recall, f1, prec_deg, rec_deg)
