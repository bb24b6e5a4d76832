"""Independent reference implementations the package is checked against."""

from __future__ import annotations

import math

PAD = 0


def brute_windows(ids, W=6, offset=4):
    """Materialize a PAD-extended list and slice the span around every position."""
    left, right = offset - 1, W - offset
    ext = [PAD] * left + list(ids) + [PAD] * right
    return [tuple(ext[i:i + W]) for i in range(len(ids))]


def bce_by_hand(y, b, w):
    return -(b * math.log(y) + w * (1 - b) * math.log(1 - y))


def count_correct(pred_rows, gold_rows, category):
    """Messages whose (position, category) set equals the gold set."""
    hits = 0
    for p, g in zip(pred_rows, gold_rows):
        if sorted((i, category[e]) for i, e in p) == sorted((i, category[e]) for i, e in g):
            hits += 1
    return hits
