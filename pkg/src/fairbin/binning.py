"""Bin tables, information value, and the exact accuracy/fairness merge solver.

A feature's prebins are contiguous intervals. Merging decisions are encoded
as a Partition (indices after which a superbin boundary falls). For a span of
prebins j..i the single-superbin IV is

    V[i][j] = (sum(p) - sum(q)) * ln(sum(p) / sum(q)),

with p from event counts and q from non-event counts (natural log). The same
form over protected/reference counts gives the fairness value matrix. Both
objectives are additive over the superbins of a partition, which lets a
dynamic program over prefixes solve

    maximize accuracy IV   subject to   fairness IV <= epsilon

exactly, keeping only Pareto-nondominated prefix states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .data import Dataset
from .errors import DataError, FairnessUndefinedError, InfeasiblePartitionError
from .stumps import PrebinSpec

GROUP = "group"
EVENT_CONDITIONED = "event_conditioned"

# Dominance margin: a prefix state is discarded only when another is at least
# this much better in one objective and not worse in the other, so distinct
# optima cannot be pruned through rounding noise.
_PRUNE_MARGIN = 1e-12

IV_BANDS = ((0.02, "none"), (0.1, "weak"), (0.3, "moderate"))


@dataclass(frozen=True)
class BinTable:
    """Per-prebin event/non-event and protected/reference counts.

    In ``group`` mode the fairness counts split all rows by the protected
    indicator; in ``event_conditioned`` mode they split only event rows.
    """

    r_e: np.ndarray
    r_ne: np.ndarray
    r_p: np.ndarray
    r_r: np.ndarray
    fairness_mode: str = GROUP

    def __post_init__(self):
        n = len(self.r_e)
        if not (len(self.r_ne) == len(self.r_p) == len(self.r_r) == n) or n == 0:
            raise DataError("bin table count vectors must share a positive length")
        for counts in (self.r_e, self.r_ne, self.r_p, self.r_r):
            if np.any(np.asarray(counts) < 0):
                raise DataError("bin counts must be nonnegative")
        if self.r_e_total == 0 or self.r_ne_total == 0:
            raise DataError("events and non-events must both be present")
        if self.r_p_total == 0 or self.r_r_total == 0:
            raise FairnessUndefinedError("fairness IV undefined: a group total is zero")
        if self.fairness_mode not in (GROUP, EVENT_CONDITIONED):
            raise DataError(f"unknown fairness mode {self.fairness_mode!r}")

    @property
    def n_prebins(self) -> int:
        return len(self.r_e)

    @cached_property
    def r_e_total(self) -> int:
        return int(np.sum(self.r_e))

    @cached_property
    def r_ne_total(self) -> int:
        return int(np.sum(self.r_ne))

    @cached_property
    def r_p_total(self) -> int:
        return int(np.sum(self.r_p))

    @cached_property
    def r_r_total(self) -> int:
        return int(np.sum(self.r_r))


@dataclass(frozen=True)
class Partition:
    """Contiguous merge of prebins into superbins.

    ``cut_after`` holds the 0-based prebin indices after which a boundary
    falls; empty means one superbin over everything.
    """

    cut_after: tuple[int, ...] = ()

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.cut_after, self.cut_after[1:])):
            raise DataError("cut_after must be strictly ascending")
        if any(c < 0 for c in self.cut_after):
            raise DataError("cut_after indices must be nonnegative")

    def n_superbins(self) -> int:
        return len(self.cut_after) + 1

    def superbins(self, n_prebins: int) -> list[tuple[int, int]]:
        """Inclusive (first, last) prebin index per superbin, left to right."""
        if self.cut_after and self.cut_after[-1] >= n_prebins - 1:
            raise DataError("cut_after index beyond the last mergeable prebin")
        bounds = (-1, *self.cut_after, n_prebins - 1)
        return [(a + 1, b) for a, b in zip(bounds, bounds[1:])]


@dataclass(frozen=True)
class SuperbinValues:
    """Lower-triangular value matrices for every contiguous span.

    ``feasible[i, j]`` marks spans j..i holding at least one event and one
    non-event. Entries of infeasible spans are stored as 0.0: in the
    telescoped linear objective they only ever appear in cancelling pairs, so
    any finite filler leaves feasible-partition values intact.
    ``fair_defined`` additionally marks spans with both group counts positive;
    a partition using a span without that property has infinite fairness IV.
    """

    v: np.ndarray
    v_fair: np.ndarray
    feasible: np.ndarray
    fair_defined: np.ndarray

    @property
    def n_prebins(self) -> int:
        return self.v.shape[0]

    def span_fairness(self, first: int, last: int) -> float:
        if not self.fair_defined[last, first]:
            return math.inf
        return float(self.v_fair[last, first])


@dataclass(frozen=True)
class MergeSolution:
    partition: Partition
    acc_iv: float
    fair_iv: float


def build_bin_table(prebins: PrebinSpec, train: Dataset, mode: str = GROUP) -> BinTable:
    """Tally events/non-events and protected/reference rows per prebin."""
    cuts = np.asarray(prebins.cuts)
    values = train.x[:, prebins.feature]
    bins = np.searchsorted(cuts, values, side="right") if cuts.size else np.zeros(train.n_rows, dtype=np.intp)
    n = prebins.n_prebins
    y = train.y
    y_a = train.y_a
    r_e = np.bincount(bins[y == 1], minlength=n)
    r_ne = np.bincount(bins[y == 0], minlength=n)
    if mode == EVENT_CONDITIONED:
        fair_rows = bins[y == 1]
        fair_flag = y_a[y == 1]
    elif mode == GROUP:
        fair_rows = bins
        fair_flag = y_a
    else:
        raise DataError(f"unknown fairness mode {mode!r}")
    r_p = np.bincount(fair_rows[fair_flag == 1], minlength=n)
    r_r = np.bincount(fair_rows[fair_flag == 0], minlength=n)
    return BinTable(r_e, r_ne, r_p, r_r, mode)


def enumerate_partitions(n_prebins: int):
    """Yield every contiguous partition of n prebins (2^(n-1) of them)."""
    positions = range(n_prebins - 1)
    for mask in range(1 << (n_prebins - 1)):
        yield Partition(tuple(i for i in positions if mask >> i & 1))


def _span_sums(counts: np.ndarray) -> np.ndarray:
    prefix = np.concatenate([[0], np.cumsum(np.asarray(counts, dtype=np.int64))])
    return prefix[1:, None] - prefix[None, :-1]  # [i, j] = sum over span j..i


def _value_matrix(pos_counts, neg_counts, pos_total, neg_total):
    sums_pos = _span_sums(pos_counts)
    sums_neg = _span_sums(neg_counts)
    defined = np.tril((sums_pos >= 1) & (sums_neg >= 1))
    p = np.divide(sums_pos, pos_total, where=defined, out=np.zeros(sums_pos.shape))
    q = np.divide(sums_neg, neg_total, where=defined, out=np.ones(sums_neg.shape))
    ratio = np.divide(p, q, where=defined, out=np.ones(p.shape))
    values = np.where(defined, (p - q) * np.log(ratio), 0.0)
    return values, defined


def superbin_values(table: BinTable) -> SuperbinValues:
    """Compute the accuracy and fairness value matrices for every span.

    Span sums are taken over integer counts before dividing, so the full
    merge evaluates to exactly 0.0 on both sides.
    """
    v, feasible = _value_matrix(table.r_e, table.r_ne, table.r_e_total, table.r_ne_total)
    v_fair, fair_defined = _value_matrix(table.r_p, table.r_r, table.r_p_total, table.r_r_total)
    return SuperbinValues(v, v_fair, feasible, fair_defined)


def partition_iv(pos_counts, neg_counts, partition: Partition) -> float:
    """Direct IV of a partition from raw counts; the brute-force oracle.

    Every superbin must contain at least one count on each side.
    """
    pos = np.asarray(pos_counts, dtype=np.int64)
    neg = np.asarray(neg_counts, dtype=np.int64)
    pos_total, neg_total = int(pos.sum()), int(neg.sum())
    total = 0.0
    for first, last in partition.superbins(len(pos)):
        sp = int(pos[first : last + 1].sum())
        sq = int(neg[first : last + 1].sum())
        if sp == 0 or sq == 0:
            raise InfeasiblePartitionError(
                f"superbin {first}..{last} has a zero count and no defined IV"
            )
        p = sp / pos_total
        q = sq / neg_total
        total += (p - q) * math.log(p / q)
    return total


def accuracy_iv(table: BinTable, partition: Partition) -> float:
    return partition_iv(table.r_e, table.r_ne, partition)


def fairness_iv(table: BinTable, partition: Partition) -> float:
    return partition_iv(table.r_p, table.r_r, partition)


def _telescoped_sum(matrix: np.ndarray, partition: Partition) -> float:
    # Sum of V[i][i]*X[i][i] + sum_j<i (V[i][j] - V[i][j+1])*X[i][j] over the
    # materialized X: only superbin-end rows i carry nonzero X entries.
    total = 0.0
    for first, last in partition.superbins(matrix.shape[0]):
        row = matrix[last]
        value = row[last]
        for j in range(first, last):
            value += row[j] - row[j + 1]
        total += value
    return total


def linear_accuracy_objective(values: SuperbinValues, partition: Partition) -> float:
    """Accuracy objective in its linear-in-X form; equals the direct IV."""
    for first, last in partition.superbins(values.n_prebins):
        if not values.feasible[last, first]:
            raise InfeasiblePartitionError(f"superbin {first}..{last} is infeasible")
    return _telescoped_sum(values.v, partition)


def linear_fairness_objective(values: SuperbinValues, partition: Partition) -> float:
    """Fairness objective in its linear-in-X form.

    Infinite when any superbin lacks one of the two groups entirely.
    """
    for first, last in partition.superbins(values.n_prebins):
        if not values.feasible[last, first]:
            raise InfeasiblePartitionError(f"superbin {first}..{last} is infeasible")
        if not values.fair_defined[last, first]:
            return math.inf
    return _telescoped_sum(values.v_fair, partition)


class _State:
    """One nondominated prefix partition inside the merge DP."""

    __slots__ = ("acc", "fair", "n_segs", "ends")

    def __init__(self, acc, fair, n_segs, ends):
        self.acc = acc
        self.fair = fair
        self.n_segs = n_segs
        self.ends = ends

    def beats(self, other: "_State") -> bool:
        if self.acc != other.acc:
            return self.acc > other.acc
        if self.fair != other.fair:
            return self.fair < other.fair
        if self.n_segs != other.n_segs:
            return self.n_segs < other.n_segs
        return self.ends < other.ends


def _prune(states: list[_State]) -> list[_State]:
    unique: dict[tuple[float, float], _State] = {}
    for s in states:
        held = unique.get((s.acc, s.fair))
        if held is None or (s.n_segs, s.ends) < (held.n_segs, held.ends):
            unique[(s.acc, s.fair)] = s
    ordered = sorted(unique.values(), key=lambda s: (-s.acc, s.fair, s.n_segs, s.ends))
    kept: list[_State] = []
    for s in ordered:
        dominated = False
        for t in kept:
            if (
                t.acc >= s.acc
                and t.fair <= s.fair
                and (t.acc - s.acc > _PRUNE_MARGIN or s.fair - t.fair > _PRUNE_MARGIN)
            ):
                dominated = True
                break
        if not dominated:
            kept.append(s)
    return kept


def solve_merge(values: SuperbinValues, epsilon: float | None = None) -> MergeSolution:
    """Maximize accuracy IV over contiguous partitions, optionally bounded.

    With ``epsilon`` set, only partitions with fairness IV <= epsilon are
    admissible; the full merge (fairness IV exactly 0) always qualifies, so a
    solution exists for every epsilon >= 0. Ties in accuracy break toward
    smaller fairness IV, then fewer superbins, then the lexicographically
    smallest cut set. The search is exact: prefix states are only discarded
    when Pareto-dominated beyond the rounding margin.
    """
    if epsilon is not None and epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    n = values.n_prebins
    levels: list[list[_State]] = [[] for _ in range(n + 1)]
    levels[0] = [_State(0.0, 0.0, 0, ())]
    for i in range(1, n + 1):
        frontier: list[_State] = []
        for j in range(1, i + 1):  # last superbin spans prebins j-1 .. i-1
            if not values.feasible[i - 1, j - 1]:
                continue
            acc_gain = float(values.v[i - 1, j - 1])
            fair_gain = values.span_fairness(j - 1, i - 1)
            for s in levels[j - 1]:
                fair = s.fair + fair_gain
                if epsilon is not None and fair > epsilon:
                    continue
                frontier.append(_State(s.acc + acc_gain, fair, s.n_segs + 1, s.ends + (i - 1,)))
        levels[i] = _prune(frontier)
    if not levels[n]:
        raise InfeasiblePartitionError("no feasible partition satisfies the bound")
    best = levels[n][0]
    for s in levels[n][1:]:
        if s.beats(best):
            best = s
    return MergeSolution(Partition(best.ends[:-1]), best.acc, best.fair)


def fairness_bound_range(values: SuperbinValues) -> tuple[float, float]:
    """[min fairness IV, fairness IV of the unconstrained accuracy optimum].

    Sweeping epsilon over this interval traces the whole trade-off front; the
    lower end is 0 whenever the full merge minimizes fairness IV.
    """
    n = values.n_prebins
    min_fair = [math.inf] * (n + 1)
    min_fair[0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, i + 1):
            if not values.feasible[i - 1, j - 1]:
                continue
            cand = min_fair[j - 1] + values.span_fairness(j - 1, i - 1)
            if cand < min_fair[i]:
                min_fair[i] = cand
    upper = solve_merge(values, None).fair_iv
    return min_fair[n], upper


def merged_edges(prebins: PrebinSpec, partition: Partition) -> tuple[float, ...]:
    """Cut points that survive the merge: one edge per superbin boundary."""
    return tuple(prebins.cuts[i] for i in partition.cut_after)


def classify_iv_strength(iv: float) -> str:
    """Customary IV reading: none (<0.02), weak, moderate, strong (>=0.3)."""
    if iv < 0:
        raise ValueError("IV must be nonnegative")
    for bound, band in IV_BANDS:
        if iv < bound:
            return band
    return "strong"
