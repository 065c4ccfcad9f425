"""Command-line surface: fit, sweep, predict, audit, explain, verify-iv.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 verification
failure. Config files are a single JSON document mirroring RunConfig; flag
overrides win over file values.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import jsonio
from .binlogit import predict_proba
from .data import NUMERIC, DataSchema, Dataset, load_csv, load_features_csv, split_train_test
from .errors import ConfigError, DataError, FairbinError
from .interpret import export_report, feature_importance, main_effects, report_document
from .metrics import ACCEPTABLE_AIR_BAND, air, auc, confusion_by_group, within_acceptable_band
from .pipeline import (
    RunConfig,
    load_model,
    run_pipeline,
    save_model,
    sweep_epsilon,
    verify_linear_iv,
    write_sweep_csv,
)

_CONFIG_DEFAULTS = {
    "seed": 23,
    "test_fraction": 0.2,
    "n_estimators": 1000,
    "learning_rate": 0.3,
    "max_bins": 256,
    "reg_lambda": 1.0,
    "reg_alpha": 0.0,
    "monotone": {},
    "epsilon": None,
    "epsilon_grid": [],
    "fairness_mode": "group",
    "ridge": 1e-4,
    "threshold": 0.5,
    "air_mode": "rate",
}

_MONOTONE_VALUES = {"+1": 1, "1": 1, "-1": -1, "0": 0, 1: 1, -1: -1, 0: 0}


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default; route to the usage exit code 1
    def error(self, message):
        raise ConfigError(message)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _epsilon_value(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError("epsilon must be nonnegative")
    return value


def _epsilon_grid(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon grid {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("epsilon grid is empty")
    if any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("epsilon grid entries must be nonnegative")
    return values


def build_parser() -> _Parser:
    parser = _Parser(prog="fairbin", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_options(p, grid=False):
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--epsilon", type=_epsilon_value, default=None)
        if grid:
            p.add_argument("--epsilon-grid", type=_epsilon_grid, default=None)
        p.add_argument("--threshold", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--air-mode", choices=("rate", "count"), default=None)
        p.add_argument("--fairness-mode", choices=("group", "event_conditioned"), default=None)
        p.add_argument("--no-plots", action="store_true")

    p_fit = sub.add_parser("fit", help="fit a model and write model.json + report.json")
    add_config_options(p_fit)
    p_fit.set_defaults(func=_cmd_fit)

    p_sweep = sub.add_parser("sweep", help="trace the trade-off front over an epsilon grid")
    add_config_options(p_sweep, grid=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_predict = sub.add_parser("predict", help="score a CSV with a saved model")
    p_predict.add_argument("--model", required=True)
    p_predict.add_argument("--data", required=True)
    p_predict.add_argument("--out", default=".")
    p_predict.add_argument("--threshold", type=float, default=0.5)
    p_predict.set_defaults(func=_cmd_predict)

    p_audit = sub.add_parser("audit", help="AUC and adverse-impact audit of a saved model")
    p_audit.add_argument("--model", required=True)
    p_audit.add_argument("--config", required=True)
    p_audit.add_argument("--out", default=".")
    p_audit.add_argument("--threshold", type=float, default=None)
    p_audit.add_argument("--air-mode", choices=("rate", "count"), default=None)
    p_audit.add_argument("--seed", type=int, default=None)
    p_audit.set_defaults(func=_cmd_audit)

    p_explain = sub.add_parser("explain", help="main-effect and importance exports")
    p_explain.add_argument("--model", required=True)
    p_explain.add_argument("--config", required=True)
    p_explain.add_argument("--out", default=".")
    p_explain.add_argument("--seed", type=int, default=None)
    p_explain.add_argument("--no-plots", action="store_true")
    p_explain.set_defaults(func=_cmd_explain)

    p_verify = sub.add_parser("verify-iv", help="check the linear IV objective exhaustively")
    p_verify.add_argument("--trials", type=_positive_int, default=200)
    p_verify.add_argument("--max-prebins", type=_positive_int, default=8)
    p_verify.add_argument("--seed", type=int, default=23)
    p_verify.add_argument("--out", default=None, help="optional verify.json path")
    p_verify.set_defaults(func=_cmd_verify)

    return parser


def _schema_from_dict(raw: dict) -> DataSchema:
    if not isinstance(raw, dict):
        raise ConfigError("schema must be an object")
    unknown = set(raw) - {"features", "target", "protected", "protected_positive"}
    if unknown:
        raise ConfigError(f"unknown schema keys: {sorted(unknown)}")
    features = raw.get("features")
    if not isinstance(features, dict) or not features:
        raise ConfigError("schema.features must be a nonempty object of name -> kind")
    for key in ("target", "protected"):
        if not isinstance(raw.get(key), str):
            raise ConfigError(f"schema.{key} must be a string")
    positive = raw.get("protected_positive")
    if positive is not None and not isinstance(positive, str):
        raise ConfigError("schema.protected_positive must be a string")
    return DataSchema(
        feature_names=tuple(features.keys()),
        feature_kinds=tuple(features.values()),
        target_name=raw["target"],
        protected_name=raw["protected"],
        protected_positive_label=positive,
    )


def parse_config(path, overrides: dict | None = None) -> RunConfig:
    """Load a run.json; apply defaults, then flag overrides."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")

    known = set(_CONFIG_DEFAULTS) | {"data", "schema"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {sorted(unknown)}")
    if "data" not in raw or "schema" not in raw:
        raise ConfigError(f"{path}: config requires 'data' and 'schema'")

    merged = dict(_CONFIG_DEFAULTS)
    merged.update({k: v for k, v in raw.items() if k not in ("data", "schema")})
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    schema = _schema_from_dict(raw["schema"])
    monotone = {}
    if not isinstance(merged["monotone"], dict):
        raise ConfigError("monotone must map feature names to '+1', '-1', or '0'")
    for name, direction in merged["monotone"].items():
        if direction not in _MONOTONE_VALUES:
            raise ConfigError(f"monotone[{name!r}] must be '+1', '-1', or '0'")
        monotone[name] = _MONOTONE_VALUES[direction]

    def as_float(key):
        value = merged[key]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{key} must be a number")
        return float(value)

    def as_int(key):
        value = merged[key]
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{key} must be an integer")
        return value

    epsilon = merged["epsilon"]
    if epsilon is not None:
        if not isinstance(epsilon, (int, float)) or isinstance(epsilon, bool):
            raise ConfigError("epsilon must be a number or null")
        epsilon = float(epsilon)
    grid = merged["epsilon_grid"]
    if not isinstance(grid, (list, tuple)):
        raise ConfigError("epsilon_grid must be a list of numbers")
    grid = tuple(float(v) for v in grid)

    try:
        return RunConfig(
            schema=schema,
            data_path=raw["data"],
            seed=as_int("seed"),
            test_fraction=as_float("test_fraction"),
            n_estimators=as_int("n_estimators"),
            learning_rate=as_float("learning_rate"),
            max_bins=as_int("max_bins"),
            reg_lambda=as_float("reg_lambda"),
            reg_alpha=as_float("reg_alpha"),
            monotone=monotone,
            epsilon=epsilon,
            epsilon_grid=grid,
            fairness_mode=str(merged["fairness_mode"]),
            ridge=as_float("ridge"),
            threshold=as_float("threshold"),
            air_mode=str(merged["air_mode"]),
        )
    except DataError as exc:
        raise ConfigError(str(exc)) from exc


def _collect_overrides(args, *names) -> dict:
    return {name: getattr(args, name, None) for name in names}


def _point_metrics(point) -> dict:
    return {
        "auc_train": point.auc_train,
        "auc_test": point.auc_test,
        "air_train": point.air_train,
        "air_test": point.air_test,
        "epsilon": point.epsilon,
    }


def _write_point_report(outcome, out_dir, plots=True):
    return export_report(
        list(outcome.effects),
        outcome.importance,
        _point_metrics(outcome.point),
        out_dir,
        intercept=outcome.adjusted_intercept,
        iv_band_by_feature=outcome.iv_bands,
        plots=plots,
    )


def _cmd_fit(args) -> int:
    overrides = _collect_overrides(args, "epsilon", "threshold", "seed", "air_mode", "fairness_mode")
    config = parse_config(args.config, overrides)
    outcome = run_pipeline(config)
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.json")
    save_model(outcome.model, outcome.assignment, model_path, config)
    written = _write_point_report(outcome, args.out, plots=not args.no_plots)
    point = outcome.point
    print(f"model: {model_path}")
    for path in written:
        print(f"report: {path}")
    print(
        f"auc_train={_show(point.auc_train)} auc_test={_show(point.auc_test)} "
        f"air_train={_show(point.air_train)} air_test={_show(point.air_test)}"
    )
    return 0


def _cmd_sweep(args) -> int:
    overrides = _collect_overrides(
        args, "epsilon_grid", "threshold", "seed", "air_mode", "fairness_mode"
    )
    config = parse_config(args.config, overrides)
    points, outcomes = sweep_epsilon(config)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "sweep.csv")
    write_sweep_csv(points, csv_path)
    for point in points:
        if point.error is not None:
            print(f"epsilon={_show(point.epsilon)}: failed: {point.error}", file=sys.stderr)
            continue
        outcome = outcomes[point.epsilon]
        doc = report_document(
            list(outcome.effects),
            outcome.importance,
            _point_metrics(point),
            intercept=outcome.adjusted_intercept,
            iv_band_by_feature=outcome.iv_bands,
        )
        jsonio.dump(doc, os.path.join(args.out, f"report_eps_{repr(float(point.epsilon))}.json"))
    print(f"sweep: {csv_path} ({len(points)} rows)")
    return 0


def _cmd_predict(args) -> int:
    model, assign, _config = load_model(args.model)
    x = load_features_csv(args.data, assign.feature_names)
    schema = DataSchema(
        feature_names=assign.feature_names,
        feature_kinds=(NUMERIC,) * len(assign.feature_names),
        target_name="__target__",
        protected_name="__protected__",
    )
    rows = Dataset(schema, x, np.zeros(len(x), dtype=np.int64), np.zeros(len(x), dtype=np.int64))
    probabilities = predict_proba(model, assign, rows)
    os.makedirs(args.out, exist_ok=True)
    scores_path = os.path.join(args.out, "scores.csv")
    with open(scores_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("row_id,probability,decision\n")
        for i, p in enumerate(probabilities):
            fh.write(f"{i},{repr(float(p))},{int(p >= args.threshold)}\n")
    print(f"scores: {scores_path} ({len(probabilities)} rows)")
    return 0


def _audit_block(scores, y, y_a, threshold, mode):
    conf = confusion_by_group(scores, y, y_a, threshold)
    block = {
        "auc": auc(scores, y),
        "air_count": air(conf, "count"),
        "air_rate": air(conf, "rate"),
        "air": air(conf, mode),
        "confusion": {
            "reference": {"tp": conf.tp[0], "fp": conf.fp[0], "tn": conf.tn[0], "fn": conf.fn[0]},
            "protected": {"tp": conf.tp[1], "fp": conf.fp[1], "tn": conf.tn[1], "fn": conf.fn[1]},
        },
    }
    block["within_band"] = within_acceptable_band(block["air"])
    return block


def _cmd_audit(args) -> int:
    overrides = _collect_overrides(args, "threshold", "seed", "air_mode")
    config = parse_config(args.config, overrides)
    model, assign, _bundle_config = load_model(args.model)
    data = load_csv(config.data_path, config.schema)
    train, test = split_train_test(data, config.split_spec())
    doc = {
        "threshold": config.threshold,
        "air_mode": config.air_mode,
        "acceptable_band": list(ACCEPTABLE_AIR_BAND),
        "train": _audit_block(
            predict_proba(model, assign, train), train.y, train.y_a, config.threshold, config.air_mode
        ),
        "test": _audit_block(
            predict_proba(model, assign, test), test.y, test.y_a, config.threshold, config.air_mode
        ),
    }
    os.makedirs(args.out, exist_ok=True)
    audit_path = os.path.join(args.out, "audit.json")
    jsonio.dump(doc, audit_path)
    print(jsonio.dumps(doc))
    print(f"audit: {audit_path}", file=sys.stderr)
    return 0


def _cmd_explain(args) -> int:
    overrides = _collect_overrides(args, "seed")
    config = parse_config(args.config, overrides)
    model, assign, _bundle_config = load_model(args.model)
    data = load_csv(config.data_path, config.schema)
    train, test = split_train_test(data, config.split_spec())
    effects, adjusted = main_effects(model, assign, train)
    importance = feature_importance(effects)
    p_train = predict_proba(model, assign, train)
    p_test = predict_proba(model, assign, test)
    conf_train = confusion_by_group(p_train, train.y, train.y_a, config.threshold)
    conf_test = confusion_by_group(p_test, test.y, test.y_a, config.threshold)
    metrics = {
        "auc_train": auc(p_train, train.y),
        "auc_test": auc(p_test, test.y),
        "air_train": air(conf_train, config.air_mode),
        "air_test": air(conf_test, config.air_mode),
        "epsilon": config.epsilon,
    }
    written = export_report(
        effects,
        importance,
        metrics,
        args.out,
        intercept=adjusted,
        plots=not args.no_plots,
    )
    for path in written:
        print(f"wrote: {path}")
    return 0


def _cmd_verify(args) -> int:
    report = verify_linear_iv(args.trials, args.max_prebins, args.seed)
    if args.out:
        jsonio.dump(report.to_dict(), args.out)
    status = "PASS" if report.passed else "FAIL"
    print(
        f"linear-IV verification: {status} "
        f"({report.partitions_checked} partitions, "
        f"max deviation acc={report.max_deviation_acc:.3e} "
        f"fair={report.max_deviation_fair:.3e})"
    )
    if not report.passed:
        for failure in report.failures[:5]:
            print(f"  offending table: {failure}", file=sys.stderr)
        return 3
    return 0


def _show(value) -> str:
    return "undefined" if value is None else f"{value:.6f}"


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except FairbinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
