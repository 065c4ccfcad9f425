"""Accuracy and fairness audit metrics: AUC and the adverse impact ratio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

ACCEPTABLE_AIR_BAND = (0.8, 1.2)

COUNT = "count"
RATE = "rate"


@dataclass(frozen=True)
class ConfusionByGroup:
    """Accept/reject tallies per group at a fixed threshold (accept: score >= t)."""

    tp: tuple[int, int]  # (reference group 0, protected group 1)
    fp: tuple[int, int]
    tn: tuple[int, int]
    fn: tuple[int, int]
    threshold: float

    def group_size(self, group: int) -> int:
        return self.tp[group] + self.fp[group] + self.tn[group] + self.fn[group]

    def accepted(self, group: int) -> int:
        return self.tp[group] + self.fp[group]


def auc(scores, y) -> float:
    """Rank-based AUC: P(score+ > score-) + 0.5 * P(tie), via average ranks."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y)
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores))
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1
    rank_sum_pos = float(np.sum(ranks[y == 1]))
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def confusion_by_group(scores, y, y_a, threshold: float) -> ConfusionByGroup:
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y)
    y_a = np.asarray(y_a)
    if not len(scores) == len(y) == len(y_a):
        raise DataError("scores, y, and y_a must have equal lengths")
    accept = scores >= threshold
    tp, fp, tn, fn = [], [], [], []
    for group in (0, 1):
        in_group = y_a == group
        tp.append(int(np.sum(in_group & accept & (y == 1))))
        fp.append(int(np.sum(in_group & accept & (y == 0))))
        tn.append(int(np.sum(in_group & ~accept & (y == 0))))
        fn.append(int(np.sum(in_group & ~accept & (y == 1))))
    return ConfusionByGroup(tuple(tp), tuple(fp), tuple(tn), tuple(fn), threshold)


def air(conf: ConfusionByGroup, mode: str = RATE) -> float | None:
    """Adverse impact ratio of protected vs. reference acceptances.

    ``count`` mode is the raw acceptance-count ratio; ``rate`` mode compares
    per-group acceptance rates and is invariant to group sizes. Returns None
    (undefined) when the reference group accepts nobody.
    """
    accepted_protected = conf.accepted(1)
    accepted_reference = conf.accepted(0)
    if accepted_reference == 0:
        return None
    if mode == COUNT:
        return accepted_protected / accepted_reference
    if mode == RATE:
        n_1, n_0 = conf.group_size(1), conf.group_size(0)
        if n_1 == 0 or n_0 == 0:
            return None
        return (accepted_protected / n_1) / (accepted_reference / n_0)
    raise DataError(f"unknown AIR mode {mode!r}")


def within_acceptable_band(value: float | None) -> bool:
    """Check against the customary [0.8, 1.2] adverse-impact band."""
    lo, hi = ACCEPTABLE_AIR_BAND
    return value is not None and lo <= value <= hi
