"""Evaluation metrics: log loss, ROC AUC, confusion statistics, R, R2, RMSE."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptyInputError,
    LengthMismatchError,
    SingleClassError,
    ZeroVarianceError,
)

PROB_CLIP = 1e-15


def _pair(a, b, name_a="first", name_b="second") -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatchError(f"{name_a} has shape {a.shape}, {name_b} has {b.shape}")
    if a.size == 0:
        raise EmptyInputError("inputs must be non-empty")
    return a, b


def log_loss(y: Sequence[float], p: Sequence[float]) -> float:
    """Mean negative Bernoulli log-likelihood; probabilities clipped to [1e-15, 1-1e-15]."""
    y, p = _pair(y, p, "labels", "probabilities")
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _average_ranks(s: np.ndarray) -> np.ndarray:
    order = np.argsort(s, kind="stable")
    ranks = np.empty(len(s), dtype=float)
    i = 0
    sorted_s = s[order]
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # 1-based average rank
        i = j + 1
    return ranks


def roc_auc(y: Sequence[float], s: Sequence[float]) -> float:
    """Rank-based (Mann-Whitney) AUC with average ranks on ties."""
    y, s = _pair(y, s, "labels", "scores")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("both classes must be present")
    ranks = _average_ranks(s)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class ConfusionStats:
    """Counts at a threshold plus the derived rates; undefined rates are None and listed."""

    tp: int
    fp: int
    tn: int
    fn: int
    sensitivity: Optional[float]
    fallout: Optional[float]
    specificity: Optional[float]
    precision: Optional[float]
    accuracy: float
    undefined: tuple[str, ...] = ()

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(y: Sequence[float], p: Sequence[float], threshold: float = 0.5) -> ConfusionStats:
    y, p = _pair(y, p, "labels", "probabilities")
    pred = p >= threshold
    actual = y == 1
    tp = int(np.sum(pred & actual))
    fp = int(np.sum(pred & ~actual))
    fn = int(np.sum(~pred & actual))
    tn = int(np.sum(~pred & ~actual))

    undefined = []

    def rate(num, den, name):
        if den == 0:
            undefined.append(name)
            return None
        return num / den

    sens = rate(tp, tp + fn, "sensitivity")
    fall = rate(fp, fp + tn, "fallout")
    spec = None if fall is None else 1.0 - fall
    if fall is None:
        undefined.append("specificity")
    prec = rate(tp, tp + fp, "precision")
    acc = (tp + tn) / len(y)
    return ConfusionStats(tp, fp, tn, fn, sens, fall, spec, prec, acc, tuple(undefined))


def pearson_r(actual: Sequence[float], predicted: Sequence[float]) -> float:
    a, p = _pair(actual, predicted, "actual", "predicted")
    if a.size < 2:
        raise EmptyInputError("need at least 2 points")
    da = a - a.mean()
    dp = p - p.mean()
    denom = np.sqrt(np.sum(da ** 2) * np.sum(dp ** 2))
    if denom == 0.0:
        raise ZeroVarianceError()
    return float(np.sum(da * dp) / denom)


def r_squared(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """1 - SSE/SST; can be negative, and differs from pearson_r**2 for biased predictors."""
    a, p = _pair(actual, predicted, "actual", "predicted")
    if a.size < 2:
        raise EmptyInputError("need at least 2 points")
    sst = np.sum((a - a.mean()) ** 2)
    if sst == 0.0:
        raise ZeroVarianceError("actual")
    return float(1.0 - np.sum((p - a) ** 2) / sst)


def rmse(actual: Sequence[float], predicted: Sequence[float]) -> float:
    a, p = _pair(actual, predicted, "actual", "predicted")
    return float(np.sqrt(np.mean((a - p) ** 2)))
