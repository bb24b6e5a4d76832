"""Losses returning ``(loss, grad wrt logits)`` for training, plus probability-space forms."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateStats
from .layers import sigmoid

EPS = 1e-7


def class_weight(stats) -> float:
    """N/M: boundary-positive over boundary-negative sample counts."""
    if stats.M == 0:
        raise DegenerateStats("no boundary-negative samples; N/M is undefined")
    return stats.N / stats.M


def weighted_bce(y_hat, labels, stats) -> float:
    """Mean of -[B log y + (N/M)(1-B) log(1-y)] with y clamped to [1e-7, 1-1e-7].

    ``stats`` is anything with ``N`` and ``M`` counts, or a float negative-class weight.
    """
    w = stats if isinstance(stats, (int, float)) else class_weight(stats)
    y = np.clip(np.asarray(y_hat, dtype=np.float64), EPS, 1 - EPS)
    b = np.asarray(labels, dtype=np.float64)
    return float(np.mean(-(b * np.log(y) + w * (1 - b) * np.log(1 - y))))


def weighted_bce_logits(logits, labels, neg_weight: float):
    """Same loss from logits; gradient is -(1-p) for positives and w*p for negatives, averaged."""
    z = np.asarray(logits, dtype=np.float64)
    b = np.asarray(labels, dtype=np.float64)
    p = sigmoid(z)
    loss = weighted_bce(p, b, float(neg_weight))
    grad = (b * (p - 1) + neg_weight * (1 - b) * p) / z.size
    return loss, grad


def cross_entropy(logits, classes):
    """Mean softmax cross-entropy over rows of ``logits``."""
    z = np.asarray(logits, dtype=np.float64)
    classes = np.asarray(classes)
    shifted = z - z.max(axis=-1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    n = z.shape[0]
    loss = -logp[np.arange(n), classes].mean()
    grad = np.exp(logp)
    grad[np.arange(n), classes] -= 1.0
    return float(loss), grad / n
