"""End-to-end orchestration: fit, epsilon sweeps, verification, model bundles.

A run is: split -> boost stumps -> extract prebins -> per-feature bin tables
and span values -> merge solve (optionally fairness-bounded) -> one-hot
binning logistic fit -> train/test AUC and adverse-impact audit. Sweeps reuse
everything up to the merge stage, since prebins do not depend on the bound.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import jsonio
from .binlogit import (
    BinAssignment,
    BinLogisticModel,
    fit_bin_logistic,
    one_hot_encode,
    predict_proba,
)
from .binning import (
    GROUP,
    BinTable,
    MergeSolution,
    SuperbinValues,
    accuracy_iv,
    build_bin_table,
    classify_iv_strength,
    enumerate_partitions,
    fairness_iv,
    linear_accuracy_objective,
    linear_fairness_objective,
    merged_edges,
    solve_merge,
    superbin_values,
)
from .data import DataSchema, Dataset, SplitSpec, load_csv, split_train_test
from .errors import ConfigError, FairbinError, ModelFormatError
from .interpret import FeatureImportance, MainEffect, feature_importance, main_effects
from .metrics import air, auc, confusion_by_group
from .stumps import PrebinSpec, StumpEnsemble, StumpParams, extract_prebins, fit_stumps

MODEL_SCHEMA_VERSION = 1
SWEEP_HEADER = "epsilon,air_train,auc_train,air_test,auc_test"


@dataclass(frozen=True)
class RunConfig:
    """Everything one pipeline run depends on; mirrors the JSON config."""

    schema: DataSchema
    data_path: str | None = None
    seed: int = 23
    test_fraction: float = 0.2
    n_estimators: int = 1000
    learning_rate: float = 0.3
    max_bins: int = 256
    reg_lambda: float = 1.0
    reg_alpha: float = 0.0
    monotone: dict = field(default_factory=dict)  # feature name -> -1 | 0 | +1
    epsilon: float | None = None
    epsilon_grid: tuple[float, ...] = ()
    fairness_mode: str = GROUP
    ridge: float = 1e-4
    threshold: float = 0.5
    air_mode: str = "rate"

    def __post_init__(self):
        if self.epsilon is not None and self.epsilon < 0:
            raise ConfigError("epsilon must be nonnegative")
        if any(e < 0 for e in self.epsilon_grid):
            raise ConfigError("epsilon grid entries must be nonnegative")
        unknown = set(self.monotone) - set(self.schema.feature_names)
        if unknown:
            raise ConfigError(f"monotone map names unknown features: {sorted(unknown)}")

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.seed, self.test_fraction)

    def stump_params(self) -> StumpParams:
        directions = tuple(self.monotone.get(name, 0) for name in self.schema.feature_names)
        return StumpParams(
            n_estimators=self.n_estimators,
            learning_rate=self.learning_rate,
            max_bins=self.max_bins,
            reg_lambda=self.reg_lambda,
            reg_alpha=self.reg_alpha,
            monotone=directions,
        )

    def monotone_directions(self) -> tuple[int, ...]:
        return tuple(self.monotone.get(name, 0) for name in self.schema.feature_names)

    def to_dict(self) -> dict:
        return {
            "data": self.data_path,
            "schema": {
                "features": {
                    name: kind
                    for name, kind in zip(self.schema.feature_names, self.schema.feature_kinds)
                },
                "target": self.schema.target_name,
                "protected": self.schema.protected_name,
                "protected_positive": self.schema.protected_positive_label,
            },
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "n_estimators": self.n_estimators,
            "learning_rate": self.learning_rate,
            "max_bins": self.max_bins,
            "reg_lambda": self.reg_lambda,
            "reg_alpha": self.reg_alpha,
            "monotone": dict(sorted(self.monotone.items())),
            "epsilon": self.epsilon,
            "epsilon_grid": list(self.epsilon_grid),
            "fairness_mode": self.fairness_mode,
            "ridge": self.ridge,
            "threshold": self.threshold,
            "air_mode": self.air_mode,
        }


@dataclass(frozen=True)
class FeatureTradeoff:
    name: str
    acc_iv: float
    fair_iv: float
    n_superbins: int


@dataclass(frozen=True)
class ParetoPoint:
    """One sweep row: the bound, audit metrics, and per-feature trade-offs."""

    epsilon: float | None
    auc_train: float | None = None
    auc_test: float | None = None
    air_train: float | None = None
    air_test: float | None = None
    features: tuple[FeatureTradeoff, ...] = ()
    error: str | None = None


@dataclass(frozen=True)
class PreparedStages:
    """Split plus everything upstream of the merge solver, reusable per epsilon."""

    config: RunConfig
    train: Dataset
    test: Dataset
    ensemble: StumpEnsemble
    prebins: list[PrebinSpec]
    tables: list[BinTable]
    values: list[SuperbinValues]


@dataclass(frozen=True)
class FitOutcome:
    model: BinLogisticModel
    assignment: BinAssignment
    point: ParetoPoint
    merges: tuple[MergeSolution, ...]
    effects: tuple[MainEffect, ...]
    importance: FeatureImportance
    adjusted_intercept: float
    iv_bands: dict


def prepare_stages(config: RunConfig, data: Dataset | None = None) -> PreparedStages:
    if data is None:
        if config.data_path is None:
            raise ConfigError("config has no data path and no dataset was supplied")
        data = load_csv(config.data_path, config.schema)
    train, test = split_train_test(data, config.split_spec())
    ensemble = fit_stumps(train, config.stump_params())
    prebins = extract_prebins(ensemble, train)
    tables = [build_bin_table(pb, train, config.fairness_mode) for pb in prebins]
    values = [superbin_values(t) for t in tables]
    return PreparedStages(config, train, test, ensemble, prebins, tables, values)


def fit_for_epsilon(prep: PreparedStages, epsilon: float | None) -> FitOutcome:
    """Merge, fit the binning GLM, and audit, at one fairness bound."""
    config = prep.config
    merges = tuple(solve_merge(v, epsilon) for v in prep.values)
    assign = BinAssignment(
        config.schema.feature_names,
        tuple(merged_edges(pb, m.partition) for pb, m in zip(prep.prebins, merges)),
    )
    design = one_hot_encode(assign, prep.train)
    model = fit_bin_logistic(design, prep.train.y, config.monotone_directions(), config.ridge)

    p_train = predict_proba(model, assign, prep.train)
    p_test = predict_proba(model, assign, prep.test)
    conf_train = confusion_by_group(p_train, prep.train.y, prep.train.y_a, config.threshold)
    conf_test = confusion_by_group(p_test, prep.test.y, prep.test.y_a, config.threshold)
    point = ParetoPoint(
        epsilon=epsilon,
        auc_train=auc(p_train, prep.train.y),
        auc_test=auc(p_test, prep.test.y),
        air_train=air(conf_train, config.air_mode),
        air_test=air(conf_test, config.air_mode),
        features=tuple(
            FeatureTradeoff(name, m.acc_iv, m.fair_iv, m.partition.n_superbins())
            for name, m in zip(config.schema.feature_names, merges)
        ),
    )
    effects, adjusted_intercept = main_effects(model, assign, prep.train)
    importance = feature_importance(effects)
    iv_bands = {
        name: classify_iv_strength(m.acc_iv)
        for name, m in zip(config.schema.feature_names, merges)
    }
    return FitOutcome(
        model, assign, point, merges, tuple(effects), importance, adjusted_intercept, iv_bands
    )


def run_pipeline(config: RunConfig, data: Dataset | None = None) -> FitOutcome:
    """The full sequence at the configured epsilon (None: unconstrained)."""
    prep = prepare_stages(config, data)
    return fit_for_epsilon(prep, config.epsilon)


def sweep_epsilon(
    config: RunConfig, data: Dataset | None = None
) -> tuple[list[ParetoPoint], dict]:
    """Run every grid bound against one shared prebin stage.

    Returns points sorted by descending epsilon plus a map from epsilon to
    the full FitOutcome for the points that succeeded; failed points carry
    their error message and stay in the table.
    """
    if not config.epsilon_grid:
        raise ConfigError("epsilon_grid must be nonempty for sweeps")
    prep = prepare_stages(config, data)
    points: list[ParetoPoint] = []
    outcomes: dict = {}
    for eps in sorted(set(config.epsilon_grid), reverse=True):
        try:
            outcome = fit_for_epsilon(prep, eps)
        except FairbinError as exc:
            points.append(ParetoPoint(epsilon=eps, error=str(exc)))
            continue
        outcomes[eps] = outcome
        points.append(outcome.point)
    return points, outcomes


def _csv_cell(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def write_sweep_csv(points: list[ParetoPoint], path) -> None:
    lines = [SWEEP_HEADER]
    for p in points:
        lines.append(
            ",".join(
                (
                    _csv_cell(p.epsilon),
                    _csv_cell(p.air_train),
                    _csv_cell(p.auc_train),
                    _csv_cell(p.air_test),
                    _csv_cell(p.auc_test),
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


@dataclass(frozen=True)
class VerificationReport:
    trials: int
    max_prebins: int
    seed: int
    partitions_checked: int
    max_deviation_acc: float
    max_deviation_fair: float
    passed: bool
    failures: tuple[dict, ...] = ()

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "max_prebins": self.max_prebins,
            "seed": self.seed,
            "partitions_checked": self.partitions_checked,
            "max_deviation_acc": self.max_deviation_acc,
            "max_deviation_fair": self.max_deviation_fair,
            "passed": self.passed,
            "failures": list(self.failures),
        }


def random_bin_table(rng: np.random.Generator, n_prebins: int) -> BinTable:
    """Random counts for verification: event columns may contain zeros,
    fairness columns stay positive so every span's fairness IV is finite."""
    while True:
        r_e = rng.integers(0, 12, n_prebins)
        r_ne = rng.integers(0, 12, n_prebins)
        if r_e.sum() > 0 and r_ne.sum() > 0:
            break
    r_p = rng.integers(1, 12, n_prebins)
    r_r = rng.integers(1, 12, n_prebins)
    return BinTable(r_e, r_ne, r_p, r_r)


def verify_linear_iv(trials: int = 200, max_prebins: int = 8, seed: int = 23) -> VerificationReport:
    """Exhaustively check the linear objective against direct IV evaluation.

    For every feasible partition of every random table, both the accuracy and
    fairness linear forms must match the straight per-superbin IV within
    1e-9. Any violation is reported with the offending table.
    """
    if max_prebins > 12:
        raise ConfigError("max_prebins above 12 makes enumeration explode")
    if max_prebins < 2 or trials < 1:
        raise ConfigError("need trials >= 1 and max_prebins >= 2")
    rng = np.random.default_rng(seed)
    tolerance = 1e-9
    checked = 0
    max_dev_acc = 0.0
    max_dev_fair = 0.0
    failures: list[dict] = []
    for _ in range(trials):
        n = int(rng.integers(2, max_prebins + 1))
        table = random_bin_table(rng, n)
        values = superbin_values(table)
        for partition in enumerate_partitions(n):
            spans = partition.superbins(n)
            if not all(values.feasible[b, a] for a, b in spans):
                continue
            checked += 1
            dev_acc = abs(
                linear_accuracy_objective(values, partition) - accuracy_iv(table, partition)
            )
            dev_fair = abs(
                linear_fairness_objective(values, partition) - fairness_iv(table, partition)
            )
            max_dev_acc = max(max_dev_acc, dev_acc)
            max_dev_fair = max(max_dev_fair, dev_fair)
            if dev_acc > tolerance or dev_fair > tolerance:
                failures.append(
                    {
                        "r_e": [int(v) for v in table.r_e],
                        "r_ne": [int(v) for v in table.r_ne],
                        "r_p": [int(v) for v in table.r_p],
                        "r_r": [int(v) for v in table.r_r],
                        "cut_after": list(partition.cut_after),
                        "deviation_acc": dev_acc,
                        "deviation_fair": dev_fair,
                    }
                )
    return VerificationReport(
        trials,
        max_prebins,
        seed,
        checked,
        max_dev_acc,
        max_dev_fair,
        not failures,
        tuple(failures),
    )


def _model_payload(model: BinLogisticModel, assign: BinAssignment, config: RunConfig | None) -> dict:
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "intercept": model.intercept,
        "ridge": model.ridge,
        "converged": model.converged,
        "features": [
            {
                "name": assign.feature_names[j],
                "edges": [float(e) for e in assign.edges[j]],
                "coefficients": [float(c) for c in model.coefficients[j]],
                "monotone": int(model.monotone[j]),
            }
            for j in range(assign.n_features())
        ],
        "config": config.to_dict() if config is not None else None,
    }


def _digest(payload: dict) -> str:
    return hashlib.sha256(jsonio.dumps(payload).encode("utf-8")).hexdigest()


def save_model(
    model: BinLogisticModel,
    assign: BinAssignment,
    destination,
    config: RunConfig | None = None,
) -> None:
    """Write a versioned model.json bundle with an integrity digest."""
    payload = _model_payload(model, assign, config)
    payload["digest"] = _digest({k: v for k, v in payload.items()})
    jsonio.dump(payload, destination)


def load_model(path) -> tuple[BinLogisticModel, BinAssignment, dict | None]:
    """Read a model bundle; predictions round-trip bit-for-bit.

    Raises ModelFormatError on version or structure problems; a digest
    mismatch (tampered or hand-edited file) is surfaced as a warning.
    """
    try:
        payload = jsonio.load(path)
    except ValueError as exc:
        raise ModelFormatError(f"{path}: malformed model bundle: {exc}") from exc
    if not isinstance(payload, dict):
        raise ModelFormatError(f"{path}: model bundle must be a JSON object")
    version = payload.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise ModelFormatError(f"{path}: unsupported schema_version {version!r}")
    stored_digest = payload.pop("digest", None)
    if stored_digest is not None and stored_digest != _digest(payload):
        warnings.warn(f"{path}: digest mismatch, file contents were modified", stacklevel=2)
    try:
        features = payload["features"]
        names = tuple(f["name"] for f in features)
        edges = tuple(tuple(float(e) for e in f["edges"]) for f in features)
        coefficients = tuple(np.asarray(f["coefficients"], dtype=np.float64) for f in features)
        monotone = tuple(int(f["monotone"]) for f in features)
        model = BinLogisticModel(
            float(payload["intercept"]),
            coefficients,
            monotone,
            float(payload["ridge"]),
            bool(payload.get("converged", True)),
        )
        assign = BinAssignment(names, edges)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model bundle: {exc}") from exc
    return model, assign, payload.get("config")
