"""Regression/classification metrics and the average-rank protocol."""

import numpy as np
from scipy.stats import rankdata

from .errors import ParameterError, ShapeError


def _paired(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise ShapeError(f"pred {pred.shape} vs truth {truth.shape}")
    if len(pred) == 0:
        raise ParameterError("need at least one prediction")
    return pred, truth


def mae(pred, truth) -> float:
    pred, truth = _paired(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def mse(pred, truth) -> float:
    pred, truth = _paired(pred, truth)
    d = pred - truth
    return float(np.mean(d * d))


def accuracy(pred, truth) -> float:
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ShapeError(f"pred {pred.shape} vs truth {truth.shape}")
    return float(np.mean(pred == truth))


def macro_f1(pred, truth, n_classes: int) -> float:
    """Unweighted mean of per-class F1; a class with no predictions and no
    members (precision + recall = 0) contributes 0."""
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ShapeError(f"pred {pred.shape} vs truth {truth.shape}")
    scores = []
    for c in range(n_classes):
        tp = float(np.sum((pred == c) & (truth == c)))
        fp = float(np.sum((pred == c) & (truth != c)))
        fn = float(np.sum((pred != c) & (truth == c)))
        denom = 2.0 * tp + fp + fn
        scores.append(2.0 * tp / denom if denom > 0.0 else 0.0)
    return float(np.mean(scores))


def rank_values(values, ascending: bool = True) -> list:
    """Competition-style average ranks: 1 is best, ties share the mean rank.

    ``ascending=True`` ranks smaller values better (error metrics); pass
    False for score metrics.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or len(v) == 0:
        raise ParameterError("rank_values needs a non-empty 1-d sequence")
    return [float(r) for r in rankdata(v if ascending else -v, method="average")]
