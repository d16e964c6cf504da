"""Recall/precision and ROC evaluation over per-frame gesture labels."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .imgcore import ParameterError


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    recall_pct: float | None  # absent (None) when tp+fn == 0
    precision_pct: float | None  # absent when tp+fp == 0


def evaluate(pred: list, truth: list, positive_class: str) -> EvalReport:
    """Per-frame counts and the percentage formulas.

    recall = TP / total true positives x 100, precision = TP / all
    detections x 100. Both numerators are exact integers multiplied by 100
    before the single division, so results are correctly rounded rationals.
    """
    if len(pred) != len(truth):
        raise ParameterError(f"length mismatch: {len(pred)} vs {len(truth)}")
    tp = fp = fn = 0
    for p, t in zip(pred, truth):
        if p == positive_class and t == positive_class:
            tp += 1
        elif p == positive_class:
            fp += 1
        elif t == positive_class:
            fn += 1
    recall = (100 * tp) / (tp + fn) if tp + fn > 0 else None
    precision = (100 * tp) / (tp + fp) if tp + fp > 0 else None
    return EvalReport(tp, fp, fn, recall, precision)


def roc_points(scored: list, thresholds: list) -> list:
    """(threshold, tpr, fpr) triples for predict-positive iff distance <= tau.

    `scored` holds (distance, is_positive) pairs; math.inf marks queries
    that can never be accepted. Thresholds must be ascending; P and N must
    both be nonzero.
    """
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ParameterError("thresholds must be sorted ascending")
    pos = sum(1 for _, is_p in scored if is_p)
    neg = len(scored) - pos
    if pos == 0 or neg == 0:
        raise ParameterError("degenerate ROC: need both positive and negative queries")
    out = []
    for tau in thresholds:
        tp = sum(1 for d, is_p in scored if is_p and d <= tau)
        fp = sum(1 for d, is_p in scored if not is_p and d <= tau)
        out.append((tau, tp / pos, fp / neg))
    return out


def roc_thresholds(scored: list) -> list:
    """Sweep points: below-everything, each finite distance, above-everything."""
    finite = sorted({d for d, _ in scored if math.isfinite(d)})
    lo = (finite[0] - 1.0) if finite else 0.0
    hi = (finite[-1] + 1.0) if finite else 1.0
    return [lo, *finite, hi]
