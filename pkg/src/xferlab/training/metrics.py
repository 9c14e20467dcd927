"""Evaluation metrics: accuracy, binary F1, MCC, Spearman correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import MetricError

METRICS = ("accuracy", "f1", "mcc", "spearman")


@dataclass(frozen=True)
class MetricReport:
    metric: str
    value: float
    n: int
    seed: int = 0
    init_mode: str = ""


def _check_lengths(predictions, labels):
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape or p.ndim != 1:
        raise MetricError(f"predictions/labels must be equal-length vectors, "
                          f"got {p.shape} vs {y.shape}")
    if p.size == 0:
        raise MetricError("cannot evaluate zero examples")
    return p, y


def accuracy(predictions, labels) -> float:
    p, y = _check_lengths(predictions, labels)
    return float(np.mean(p == y))


def f1_binary(predictions, labels) -> float:
    """F1 of the positive class (label 1); 0 when there are no positives at all."""
    p, y = _check_lengths(predictions, labels)
    _require_binary(p, y)
    tp = int(np.sum((p == 1) & (y == 1)))
    fp = int(np.sum((p == 1) & (y == 0)))
    fn = int(np.sum((p == 0) & (y == 1)))
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2.0 * tp / denom


def mcc_binary(predictions, labels) -> float:
    """Matthews correlation from the 2x2 confusion matrix; 0 on degenerate margins."""
    p, y = _check_lengths(predictions, labels)
    _require_binary(p, y)
    tp = float(np.sum((p == 1) & (y == 1)))
    tn = float(np.sum((p == 0) & (y == 0)))
    fp = float(np.sum((p == 1) & (y == 0)))
    fn = float(np.sum((p == 0) & (y == 1)))
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0.0:
        return 0.0
    return (tp * tn - fp * fn) / np.sqrt(denom)


def _require_binary(p, y):
    vals = set(np.unique(p)) | set(np.unique(y))
    if not vals <= {0, 1}:
        raise MetricError(f"binary metric got labels {sorted(vals)}")


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    ranks[order] = np.arange(1, len(x) + 1)
    # average rank within each tie group
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        if j > i:
            ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(predictions, labels) -> float:
    """Pearson correlation of average ranks."""
    p, y = _check_lengths(predictions, labels)
    rp = average_ranks(p)
    ry = average_ranks(y)
    sp = rp.std()
    sy = ry.std()
    if sp == 0.0 or sy == 0.0:
        raise MetricError("spearman undefined for a constant vector")
    return float(np.mean((rp - rp.mean()) * (ry - ry.mean())) / (sp * sy))


_FUNCS = {"accuracy": accuracy, "f1": f1_binary, "mcc": mcc_binary,
          "spearman": spearman}


def evaluate(predictions, labels, metric: str, seed: int = 0,
             init_mode: str = "") -> MetricReport:
    """Score predictions against labels with the named metric."""
    if metric not in _FUNCS:
        raise MetricError(f"unknown metric {metric!r}; choose from {METRICS}")
    value = _FUNCS[metric](predictions, labels)
    return MetricReport(metric=metric, value=float(value),
                        n=len(np.asarray(labels)), seed=seed, init_mode=init_mode)
