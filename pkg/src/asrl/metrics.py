"""Evaluation metrics: MSE, MAE, R^2, recall-at-mean and wall-clock timing."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from asrl.errors import DomainError

__all__ = ["EvalReport", "mse", "mae", "r2", "recall_at_mean", "timed", "evaluate"]


def _pair(y, y_hat):
    y = np.asarray(y, dtype=float).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=float).reshape(-1)
    if y.size == 0:
        raise DomainError("metrics need at least one sample")
    if y.shape != y_hat.shape:
        raise DomainError(f"length mismatch: {y.size} targets vs {y_hat.size} predictions")
    return y, y_hat


def mse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))


def mae(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def r2(y, y_hat) -> float:
    """Coefficient of determination; undefined (raises) for constant ``y``."""
    y, y_hat = _pair(y, y_hat)
    if y.size < 2:
        raise DomainError("r2 needs at least 2 samples")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DomainError("r2 undefined for constant targets")
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / ss_tot


def recall_at_mean(y, y_hat) -> float:
    """Recall of the "above average" class.

    Both truth and prediction are binarized at mean(y) of the evaluation set
    with a strict comparison, then recall = TP / (TP + FN). This is a
    reconstruction: the benchmark tables name the metric without defining it.
    """
    y, y_hat = _pair(y, y_hat)
    t = y.mean()
    pos = y > t
    n_pos = int(pos.sum())
    if n_pos == 0:
        raise DomainError("recall undefined: no target exceeds the mean")
    return int(np.sum(pos & (y_hat > t))) / n_pos


def timed(f: Callable[[], Any]) -> tuple[Any, float]:
    t0 = time.perf_counter()
    result = f()
    return result, time.perf_counter() - t0


@dataclass(frozen=True)
class EvalReport:
    mse: float
    mae: float
    r2: float
    recall: float
    train_seconds: float


def evaluate(y, y_hat, train_seconds: float = 0.0) -> EvalReport:
    return EvalReport(mse(y, y_hat), mae(y, y_hat), r2(y, y_hat), recall_at_mean(y, y_hat), float(train_seconds))
