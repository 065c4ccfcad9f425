"""Main-effect step functions, feature importance, and report export.

Each feature's effect is its superbin coefficient vector centered by the
count-weighted mean over training rows; the removed means accumulate into an
adjusted intercept so predictions are untouched. A feature's importance is
the count-weighted sample variance of its centered effect over rows.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import jsonio
from .binlogit import BinAssignment, BinLogisticModel
from .data import Dataset
from .errors import DataError


@dataclass(frozen=True)
class MainEffect:
    feature: str
    edges: tuple[float, ...]
    values: tuple[float, ...]  # centered, one per superbin
    counts: tuple[int, ...]  # training rows per superbin


@dataclass(frozen=True)
class FeatureImportance:
    names: tuple[str, ...]
    index: tuple[float, ...]  # raw variance indices
    share: tuple[float, ...]  # normalized, all zero when every index is zero


def main_effects(
    model: BinLogisticModel, assign: BinAssignment, train: Dataset
) -> tuple[list[MainEffect], float]:
    """Centered per-feature step functions plus the adjusted intercept."""
    effects = []
    adjusted_intercept = model.intercept
    n = train.n_rows
    for j, name in enumerate(assign.feature_names):
        idx = assign.assign(j, train.x[:, j])
        counts = np.bincount(idx, minlength=assign.n_superbins(j))
        coef = model.coefficients[j]
        mean = float(np.dot(counts, coef)) / n
        adjusted_intercept += mean
        effects.append(
            MainEffect(
                name,
                tuple(assign.edges[j]),
                tuple(float(c - mean) for c in coef),
                tuple(int(c) for c in counts),
            )
        )
    return effects, adjusted_intercept


def feature_importance(effects: list[MainEffect]) -> FeatureImportance:
    """Count-weighted sample variance of each step function over rows."""
    if not effects:
        return FeatureImportance((), (), ())
    n = sum(effects[0].counts)
    if n < 2:
        raise DataError("importance needs at least 2 training rows")
    index = []
    for effect in effects:
        counts = np.asarray(effect.counts, dtype=np.float64)
        values = np.asarray(effect.values)
        mean = float(np.dot(counts, values)) / n
        index.append(float(np.dot(counts, (values - mean) ** 2)) / (n - 1))
    total = sum(index)
    share = [v / total for v in index] if total > 0 else [0.0] * len(index)
    return FeatureImportance(
        tuple(e.feature for e in effects), tuple(index), tuple(share)
    )


def report_document(
    effects: list[MainEffect],
    importance: FeatureImportance,
    metrics: dict,
    *,
    intercept: float,
    iv_band_by_feature: dict[str, str] | None = None,
) -> dict:
    """The report.json payload (schema_version 1)."""
    bands = iv_band_by_feature or {}
    return {
        "schema_version": 1,
        "intercept": float(intercept),
        "features": [
            {
                "name": effect.feature,
                "edges": [float(e) for e in effect.edges],
                "values": [float(v) for v in effect.values],
                "counts": [int(c) for c in effect.counts],
                "importance": importance.index[k],
                "share": importance.share[k],
                "iv_strength_band": bands.get(effect.feature, "none"),
            }
            for k, effect in enumerate(effects)
        ],
        "metrics": {
            "auc_train": metrics.get("auc_train"),
            "auc_test": metrics.get("auc_test"),
            "air_train": metrics.get("air_train"),
            "air_test": metrics.get("air_test"),
            "epsilon": metrics.get("epsilon"),
        },
    }


def export_report(
    effects: list[MainEffect],
    importance: FeatureImportance,
    metrics: dict,
    destination,
    *,
    intercept: float,
    iv_band_by_feature: dict[str, str] | None = None,
    plots: bool = True,
) -> list[str]:
    """Write report.json (and step/importance SVGs when ``plots``).

    Returns the list of written paths. ``metrics`` must carry auc_train,
    auc_test, air_train, air_test, and epsilon (None for unconstrained runs).
    """
    os.makedirs(destination, exist_ok=True)
    doc = report_document(
        effects, importance, metrics, intercept=intercept, iv_band_by_feature=iv_band_by_feature
    )
    report_path = os.path.join(destination, "report.json")
    try:
        jsonio.dump(doc, report_path)
    except OSError as exc:
        raise DataError(f"cannot write report to {report_path}: {exc}") from exc
    written = [report_path]
    if plots:
        from . import plots as plotting

        for effect in effects:
            path = os.path.join(destination, f"effect_{_safe_name(effect.feature)}.svg")
            plotting.save_main_effect(effect, path)
            written.append(path)
        path = os.path.join(destination, "importance.svg")
        plotting.save_importance(importance, path)
        written.append(path)
    return written


def load_report(path) -> dict:
    report = jsonio.load(path)
    if report.get("schema_version") != 1:
        raise DataError(f"unsupported report schema_version {report.get('schema_version')!r}")
    return report


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)
