"""Binning logistic regression with optional monotone coefficient constraints.

The design matrix is one indicator column per (feature, superbin) plus an
unpenalized intercept. Fitting minimizes

    mean logloss + ridge/2 * ||coefficients||^2

subject to per-feature monotone orderings of the coefficients, by projected
gradient descent with backtracking; the projection is the exact Euclidean
isotonic projection (pool adjacent violators) applied per constrained block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError

MAX_ITER = 500
PG_TOL = 1e-8


@dataclass(frozen=True)
class BinAssignment:
    """Per-feature merged cut points; values map to superbin indices."""

    feature_names: tuple[str, ...]
    edges: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.feature_names) != len(self.edges):
            raise DataError("one edge list per feature required")
        for feature_edges in self.edges:
            if any(b <= a for a, b in zip(feature_edges, feature_edges[1:])):
                raise DataError("superbin edges must be strictly ascending")

    def n_features(self) -> int:
        return len(self.feature_names)

    def n_superbins(self, feature: int) -> int:
        return len(self.edges[feature]) + 1

    def assign(self, feature: int, values: np.ndarray) -> np.ndarray:
        """Superbin index per value: (-inf, e1) -> 0, [e1, e2) -> 1, ..."""
        edges = np.asarray(self.edges[feature])
        if edges.size == 0:
            return np.zeros(len(values), dtype=np.intp)
        return np.searchsorted(edges, values, side="right")


@dataclass(frozen=True)
class DesignMatrix:
    """One-hot design with intercept column 0 and one slice per feature."""

    x: np.ndarray
    blocks: tuple[slice, ...]


@dataclass(frozen=True)
class BinLogisticModel:
    intercept: float
    coefficients: tuple[np.ndarray, ...]  # per feature, one value per superbin
    monotone: tuple[int, ...]
    ridge: float
    converged: bool = True


def one_hot_encode(assign: BinAssignment, rows: Dataset) -> DesignMatrix:
    """Indicator encoding of every feature's superbins, intercept first."""
    widths = [assign.n_superbins(j) for j in range(assign.n_features())]
    total = 1 + sum(widths)
    x = np.zeros((rows.n_rows, total))
    x[:, 0] = 1.0
    blocks = []
    start = 1
    for j, width in enumerate(widths):
        idx = assign.assign(j, rows.x[:, j])
        x[np.arange(rows.n_rows), start + idx] = 1.0
        blocks.append(slice(start, start + width))
        start += width
    return DesignMatrix(x, tuple(blocks))


def isotonic_projection(v: np.ndarray, direction: int = 1) -> np.ndarray:
    """Euclidean projection onto the monotone cone (equal weights, PAV)."""
    if direction == 0:
        return np.asarray(v, dtype=np.float64).copy()
    if direction < 0:
        return -isotonic_projection(-np.asarray(v), 1)
    v = np.asarray(v, dtype=np.float64)
    level = []  # (mean, count) pools
    for value in v:
        mean, count = value, 1
        while level and level[-1][0] > mean:
            prev_mean, prev_count = level.pop()
            total = prev_count + count
            mean = (prev_mean * prev_count + mean * count) / total
            count = total
        level.append((mean, count))
    out = np.empty_like(v)
    pos = 0
    for mean, count in level:
        out[pos : pos + count] = mean
        pos += count
    return out


def _project(w, blocks, monotone):
    out = w.copy()
    for block, direction in zip(blocks, monotone):
        if direction != 0:
            out[block] = isotonic_projection(w[block], direction)
    return out


def _penalized_logloss(design, y, ridge, w):
    z = design.x @ w
    # logloss of y in {0,1} under logit z, numerically stable
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return loss + 0.5 * ridge * float(np.dot(w[1:], w[1:]))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    p = np.empty_like(z)
    pos = z >= 0
    p[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    p[~pos] = ez / (1.0 + ez)
    return p


def _gradient(design, y, ridge, w):
    p = _sigmoid(design.x @ w)
    g = design.x.T @ (p - y) / len(y)
    g[1:] += ridge * w[1:]
    return g


def fit_bin_logistic(
    design: DesignMatrix,
    y: np.ndarray,
    monotone: tuple[int, ...],
    ridge: float,
) -> BinLogisticModel:
    """Projected gradient fit from a zero start; fully deterministic.

    Stops when the unit-step projected-gradient norm drops to 1e-8 or after
    500 iterations (the model is then returned with ``converged`` False).
    The backtracking condition is the standard quadratic upper bound, so the
    penalized logloss never increases across accepted steps.
    """
    y = np.asarray(y, dtype=np.float64)
    if len(y) < 2:
        raise DataError("need at least 2 rows to fit")
    if not (np.any(y == 0) and np.any(y == 1)):
        raise DataError("single-class target")
    if len(monotone) != len(design.blocks):
        raise DataError("one monotone direction per feature block required")
    if ridge < 0:
        raise DataError("ridge must be nonnegative")

    w = np.zeros(design.x.shape[1])
    step = 1.0
    converged = False
    loss = _penalized_logloss(design, y, ridge, w)
    for _ in range(MAX_ITER):
        g = _gradient(design, y, ridge, w)
        pg = w - _project(w - g, design.blocks, monotone)
        if float(np.linalg.norm(pg)) <= PG_TOL:
            converged = True
            break
        while True:
            trial = _project(w - step * g, design.blocks, monotone)
            delta = trial - w
            trial_loss = _penalized_logloss(design, y, ridge, trial)
            bound = loss + float(g @ delta) + float(delta @ delta) / (2.0 * step)
            if trial_loss <= bound or step < 1e-18:
                break
            step *= 0.5
        w = trial
        loss = trial_loss
        step = min(step * 2.0, 1e6)

    intercept = float(w[0])
    coefficients = tuple(w[block].copy() for block in design.blocks)
    return BinLogisticModel(intercept, coefficients, tuple(monotone), ridge, converged)


def score_logit(model: BinLogisticModel, assign: BinAssignment, rows: Dataset) -> np.ndarray:
    out = np.full(rows.n_rows, model.intercept)
    for j in range(assign.n_features()):
        idx = assign.assign(j, rows.x[:, j])
        out = out + model.coefficients[j][idx]
    return out


def predict_proba(model: BinLogisticModel, assign: BinAssignment, rows: Dataset) -> np.ndarray:
    """sigma(intercept + per-feature superbin coefficient), elementwise."""
    return _sigmoid(score_logit(model, assign, rows))
