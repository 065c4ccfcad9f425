"""Tabular data loading, validation, and deterministic train/test splitting.

Rows are kept as a dense float64 matrix in schema column order, with the
binary target ``y`` and the protected-group indicator ``y_a`` as separate
vectors. Splitting uses an explicit splitmix64-driven Fisher-Yates shuffle so
identical (data, seed) pairs reproduce identical splits on every platform.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DegenerateSplitError

NUMERIC = "numeric"
BINARY = "binary"

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class DataSchema:
    """Column roles: ordered features, target, and protected-group column.

    ``protected_positive_label`` is the raw cell value mapped to y_a = 1. When
    omitted, the protected column must contain exactly two distinct raw
    values and the lexicographically larger one is mapped to 1 (for a 0/1
    column this picks "1").
    """

    feature_names: tuple[str, ...]
    feature_kinds: tuple[str, ...]
    target_name: str
    protected_name: str
    protected_positive_label: str | None = None

    def __post_init__(self):
        if len(self.feature_names) != len(set(self.feature_names)):
            raise DataError("feature names must be unique")
        if len(self.feature_kinds) != len(self.feature_names):
            raise DataError("feature_kinds must align with feature_names")
        for kind in self.feature_kinds:
            if kind not in (NUMERIC, BINARY):
                raise DataError(f"unknown feature kind {kind!r}")
        for reserved in (self.target_name, self.protected_name):
            if reserved in self.feature_names:
                raise DataError(f"column {reserved!r} cannot double as a feature")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus binary target and protected-group indicator."""

    schema: DataSchema
    x: np.ndarray  # (n_rows, n_features) float64
    y: np.ndarray  # (n_rows,) int64 in {0, 1}
    y_a: np.ndarray  # (n_rows,) int64 in {0, 1}
    row_ids: tuple[int, ...] = field(repr=False, default=())

    @property
    def n_rows(self) -> int:
        return self.x.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.x[:, self.schema.feature_names.index(name)]

    def validate(self, require_both_groups: bool = True) -> None:
        n = self.n_rows
        if n < 2:
            raise DataError("dataset needs at least 2 rows")
        if self.y.shape != (n,) or self.y_a.shape != (n,):
            raise DataError("y and y_a must match the number of rows")
        if not (np.any(self.y == 0) and np.any(self.y == 1)):
            raise DataError("target must contain both classes")
        if require_both_groups and not (np.any(self.y_a == 0) and np.any(self.y_a == 1)):
            raise DataError("protected column must contain both groups")

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        ids = tuple(self.row_ids[i] for i in idx) if self.row_ids else tuple(int(i) for i in idx)
        return Dataset(self.schema, self.x[idx], self.y[idx], self.y_a[idx], ids)


@dataclass(frozen=True)
class SplitSpec:
    """Seeded split request; test side gets ceil(n_rows * test_fraction) rows."""

    seed: int = 23
    test_fraction: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise DataError("test_fraction must lie strictly between 0 and 1")
        if not 0 <= self.seed <= _MASK64:
            raise DataError("seed must fit in 64 unsigned bits")


class SplitMix64:
    """Minimal splitmix64 stream; the shuffle's only source of randomness."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        return self.next_u64() % bound


def shuffled_indices(n: int, seed: int) -> list[int]:
    """Fisher-Yates permutation of range(n) driven by splitmix64."""
    idx = list(range(n))
    rng = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def split_train_test(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic split; returns (train, test) with sorted row indices.

    Raises DegenerateSplitError when either side ends up with fewer than two
    rows or a single-class target.
    """
    n = data.n_rows
    n_test = math.ceil(n * spec.test_fraction)
    order = shuffled_indices(n, spec.seed)
    test_idx = sorted(order[:n_test])
    train_idx = sorted(order[n_test:])
    if len(train_idx) < 2 or len(test_idx) < 2:
        raise DegenerateSplitError(
            f"degenerate split: train={len(train_idx)} test={len(test_idx)} rows"
        )
    train = data.take(train_idx)
    test = data.take(test_idx)
    for side, name in ((train, "train"), (test, "test")):
        if not (np.any(side.y == 0) and np.any(side.y == 1)):
            raise DegenerateSplitError(f"degenerate split: single-class y in {name} set")
    return train, test


def _parse_cell(raw: str, column: str, line: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise DataError(
            f"unparseable numeric cell {raw!r} in column {column!r} at data row {line}"
        ) from None


def load_csv(path, schema: DataSchema) -> Dataset:
    """Load an RFC 4180 CSV (header row, UTF-8, '.' decimals) under a schema.

    The target column must parse to {0, 1}. The protected column is mapped to
    1 where the raw value equals ``schema.protected_positive_label``; without
    an explicit label the column must hold exactly two distinct raw values.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        positions = {}
        for name in (*schema.feature_names, schema.target_name, schema.protected_name):
            if name not in header:
                raise DataError(f"{path}: missing column {name!r}")
            positions[name] = header.index(name)

        features = [[] for _ in schema.feature_names]
        y: list[int] = []
        protected_raw: list[str] = []
        for line, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {line} has {len(row)} cells, header has {len(header)}")
            for k, name in enumerate(schema.feature_names):
                features[k].append(_parse_cell(row[positions[name]], name, line))
            target_raw = row[positions[schema.target_name]].strip()
            if target_raw not in ("0", "1"):
                value = _parse_cell(target_raw, schema.target_name, line)
                if value not in (0.0, 1.0):
                    raise DataError(f"{path}: target not binary (row {line}: {target_raw!r})")
                y.append(int(value))
            else:
                y.append(int(target_raw))
            protected_raw.append(row[positions[schema.protected_name]])

    if not y:
        raise DataError(f"{path}: no data rows")

    y_a = _map_protected(protected_raw, schema, path)
    x = np.column_stack([np.asarray(col, dtype=np.float64) for col in features])

    for k, (name, kind) in enumerate(zip(schema.feature_names, schema.feature_kinds)):
        if kind == BINARY and len(np.unique(x[:, k])) != 2:
            raise DataError(f"{path}: binary feature {name!r} must have exactly 2 distinct values")

    data = Dataset(schema, x, np.asarray(y, dtype=np.int64), y_a, tuple(range(len(y))))
    data.validate()
    return data


def load_features_csv(path, feature_names: tuple[str, ...]) -> np.ndarray:
    """Read only the named feature columns (for scoring unlabeled data)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        positions = []
        for name in feature_names:
            if name not in header:
                raise DataError(f"{path}: missing column {name!r}")
            positions.append(header.index(name))
        rows = []
        for line, row in enumerate(reader, start=1):
            if not row:
                continue
            rows.append(
                [_parse_cell(row[pos], feature_names[k], line) for k, pos in enumerate(positions)]
            )
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def _map_protected(raw: list[str], schema: DataSchema, path) -> np.ndarray:
    label = schema.protected_positive_label
    if label is None:
        distinct = sorted(set(raw))
        if len(distinct) != 2:
            raise DataError(
                f"{path}: protected column {schema.protected_name!r} has "
                f"{len(distinct)} distinct values; set protected_positive_label"
            )
        label = distinct[1]
    return np.asarray([1 if cell == label else 0 for cell in raw], dtype=np.int64)
