"""Depth-1 gradient boosting on logistic loss, the prebin generator.

Each round fits one decision stump by scanning equal-frequency candidate
thresholds for every feature, scoring them with the second-order gain

    G_L^2 / (H_L + lambda) + G_R^2 / (H_R + lambda)
        - (G_L + G_R)^2 / (H_L + H_R + lambda)

over gradient/hessian sums (g = p - y, h = p(1 - p)). Leaf values are the
closed form -soft_threshold(G, alpha) / (H + lambda), stored pre-scaled by
the learning rate. Candidate splits that violate a requested monotone
direction are dropped before the gain comparison, which makes every stump
(and therefore every accumulated per-feature step function) monotone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError


@dataclass(frozen=True)
class StumpParams:
    n_estimators: int = 1000
    learning_rate: float = 0.3
    max_bins: int = 256
    reg_lambda: float = 1.0
    reg_alpha: float = 0.0
    monotone: tuple[int, ...] | None = None  # per-feature +1 / -1 / 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise DataError("n_estimators must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise DataError("learning_rate must lie in (0, 1]")
        if self.max_bins < 2:
            raise DataError("max_bins must be >= 2")
        if self.reg_lambda < 0 or self.reg_alpha < 0:
            raise DataError("regularization strengths must be nonnegative")
        if self.monotone is not None and any(d not in (-1, 0, 1) for d in self.monotone):
            raise DataError("monotone directions must be -1, 0, or +1")

    def direction(self, feature: int) -> int:
        if self.monotone is None:
            return 0
        return self.monotone[feature]


@dataclass(frozen=True)
class Stump:
    """One split: rows with value < threshold get left_value, else right_value."""

    feature: int
    threshold: float
    left_value: float
    right_value: float


@dataclass(frozen=True)
class StumpEnsemble:
    base_score: float
    stumps: tuple[Stump, ...]
    params: StumpParams
    feature_names: tuple[str, ...]

    @property
    def is_trivial(self) -> bool:
        """True when no admissible split was ever found (constant prediction)."""
        return not self.stumps


@dataclass(frozen=True)
class PrebinSpec:
    """Unique split points of one feature and the per-interval logit offsets."""

    feature: int
    cuts: tuple[float, ...]  # strictly ascending; intervals (-inf,c1),[c1,c2),...
    accumulated_values: tuple[float, ...]

    @property
    def n_prebins(self) -> int:
        return len(self.cuts) + 1


def candidate_thresholds(values: np.ndarray, max_bins: int) -> np.ndarray:
    """Equal-frequency candidate thresholds, strictly inside the value range.

    With few distinct values every midpoint between neighbours is offered;
    otherwise at most max_bins - 1 quantile midpoints are used.
    """
    unique = np.unique(values)
    if unique.size <= 1:
        return np.empty(0)
    if unique.size <= max_bins:
        return (unique[1:] + unique[:-1]) / 2.0
    edges = np.quantile(values, np.arange(1, max_bins) / max_bins, method="midpoint")
    edges = np.unique(edges)
    return edges[(edges > unique[0]) & (edges < unique[-1])]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _soft_threshold(g: np.ndarray, alpha: float) -> np.ndarray:
    if alpha == 0.0:
        return g
    return np.sign(g) * np.maximum(np.abs(g) - alpha, 0.0)


def fit_stumps(train: Dataset, params: StumpParams) -> StumpEnsemble:
    """Boost depth-1 stumps on the training set; base score is logit 0.

    Stops early once no candidate split has positive gain (the gradient state
    can no longer change), which also covers an all-constant feature set: the
    returned ensemble is then empty and flagged via ``is_trivial``.
    """
    x, y = train.x, train.y.astype(np.float64)
    n, k = x.shape
    lam, alpha, lr = params.reg_lambda, params.reg_alpha, params.learning_rate

    orders = [np.argsort(x[:, j], kind="stable") for j in range(k)]
    sorted_vals = [x[orders[j], j] for j in range(k)]
    thresholds = [candidate_thresholds(x[:, j], params.max_bins) for j in range(k)]
    # rows strictly below each threshold, constant across rounds
    left_counts = [
        np.searchsorted(sorted_vals[j], thresholds[j], side="left") for j in range(k)
    ]

    logit = np.zeros(n)
    stumps: list[Stump] = []
    for _ in range(params.n_estimators):
        p = _sigmoid(logit)
        g = p - y
        h = p * (1.0 - p)
        g_total, h_total = g.sum(), h.sum()

        best_gain = 0.0
        best = None  # (feature, threshold, left_raw, right_raw)
        for j in range(k):
            if thresholds[j].size == 0:
                continue
            cg = np.cumsum(g[orders[j]])
            ch = np.cumsum(h[orders[j]])
            pos = left_counts[j]
            gl, hl = cg[pos - 1], ch[pos - 1]
            gr, hr = g_total - gl, h_total - hl
            gain = (
                gl**2 / (hl + lam)
                + gr**2 / (hr + lam)
                - (gl + gr) ** 2 / (hl + hr + lam)
            )
            left_raw = -_soft_threshold(gl, alpha) / (hl + lam)
            right_raw = -_soft_threshold(gr, alpha) / (hr + lam)
            direction = params.direction(j)
            if direction > 0:
                gain = np.where(left_raw <= right_raw, gain, -np.inf)
            elif direction < 0:
                gain = np.where(left_raw >= right_raw, gain, -np.inf)
            best_j = int(np.argmax(gain))
            if gain[best_j] > best_gain:
                best_gain = float(gain[best_j])
                best = (
                    j,
                    float(thresholds[j][best_j]),
                    float(left_raw[best_j]),
                    float(right_raw[best_j]),
                )
        if best is None:
            break
        feature, threshold, left_raw, right_raw = best
        stump = Stump(feature, threshold, lr * left_raw, lr * right_raw)
        stumps.append(stump)
        below = x[:, feature] < threshold
        logit = logit + np.where(below, stump.left_value, stump.right_value)

    return StumpEnsemble(0.0, tuple(stumps), params, train.schema.feature_names)


def predict_logit(model: StumpEnsemble, rows: Dataset) -> np.ndarray:
    """Raw additive score: base_score plus every stump's contribution."""
    out = np.full(rows.n_rows, model.base_score)
    for stump in model.stumps:
        below = rows.x[:, stump.feature] < stump.threshold
        out = out + np.where(below, stump.left_value, stump.right_value)
    return out


def extract_prebins(model: StumpEnsemble, train: Dataset) -> list[PrebinSpec]:
    """Collapse the ensemble into per-feature step functions.

    cuts are the sorted unique thresholds of that feature's stumps; interval
    values are the summed stump contributions. Features without stumps get a
    single full-range prebin with value 0.
    """
    n_features = train.x.shape[1]
    specs = []
    for j in range(n_features):
        own = [s for s in model.stumps if s.feature == j]
        if not own:
            specs.append(PrebinSpec(j, (), (0.0,)))
            continue
        cuts = sorted({s.threshold for s in own})
        values = np.zeros(len(cuts) + 1)
        for stump in own:
            split_at = cuts.index(stump.threshold) + 1  # first interval >= threshold
            values[:split_at] += stump.left_value
            values[split_at:] += stump.right_value
        specs.append(PrebinSpec(j, tuple(cuts), tuple(float(v) for v in values)))
    return specs


def step_function_logit(specs: list[PrebinSpec], rows: Dataset, base_score: float = 0.0) -> np.ndarray:
    """Evaluate the extracted per-feature step functions additively.

    Must agree with predict_logit on the originating ensemble.
    """
    out = np.full(rows.n_rows, base_score)
    for spec in specs:
        if not spec.cuts:
            out = out + spec.accumulated_values[0]
            continue
        idx = np.searchsorted(np.asarray(spec.cuts), rows.x[:, spec.feature], side="right")
        out = out + np.asarray(spec.accumulated_values)[idx]
    return out
