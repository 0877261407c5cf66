"""Evaluation helpers: ROC-AUC and Spearman rank correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateInput, LengthMismatch, SingleClass


@dataclass(frozen=True)
class LabeledScore:
    score: float
    label: bool  # True = positive


def roc_auc(scores, labels) -> float:
    """ROC-AUC as the normalized Mann-Whitney U statistic, ties counting 1/2.

    labels are truthy for positives. Needs at least one positive and one
    negative; equal-length sequences.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise LengthMismatch(f"scores {s.shape} vs labels {y.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(f"{n_pos} positives, {n_neg} negatives")
    # average ranks give each tied positive/negative pair exactly 1/2 credit
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def spearman_rho(xs, ys) -> float:
    """Pearson correlation of average-rank vectors."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"{x.shape} vs {y.shape}")
    if x.size < 3:
        raise DegenerateInput(f"need at least 3 points, got {x.size}")
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        raise DegenerateInput("constant input has no rank ordering")
    return float(np.corrcoef(rx, ry)[0, 1])
