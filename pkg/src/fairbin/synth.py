"""Seeded synthetic credit-approval data with a built-in accuracy/fairness
tension: the strongest predictors are shifted between the protected and
reference groups, so an unconstrained scorecard shows disparate impact and
tightening the fairness bound trades accuracy for a higher AIR.

Usable as a library (``make_credit_data``) or as a tiny CSV writer:

    python -m fairbin.synth demo.csv --rows 4000 --seed 7
"""

from __future__ import annotations

import numpy as np

from .data import NUMERIC, DataSchema, Dataset

FEATURES = ("balance", "utilization", "inquiries", "past_due", "open_accounts")

MONOTONE = {
    "balance": 1,
    "utilization": -1,
    "inquiries": -1,
    "past_due": -1,
    "open_accounts": 0,
}


def credit_schema() -> DataSchema:
    return DataSchema(
        feature_names=FEATURES,
        feature_kinds=(NUMERIC,) * len(FEATURES),
        target_name="approved",
        protected_name="group",
        protected_positive_label="1",
    )


def make_credit_data(n_rows: int = 4000, seed: int = 7) -> Dataset:
    rng = np.random.default_rng(seed)
    protected = (rng.random(n_rows) < 0.45).astype(np.int64)
    shift = np.where(protected == 1, -1.1, 0.0)

    balance = rng.normal(0.0, 1.0, n_rows) + shift
    utilization = rng.normal(0.0, 1.0, n_rows) - 0.9 * shift
    inquiries = rng.poisson(2.0, n_rows).astype(np.float64)
    past_due = rng.gamma(2.0, 1.0, n_rows)
    open_accounts = rng.integers(0, 12, n_rows).astype(np.float64)

    logit = (
        0.9
        + 1.3 * balance
        - 1.1 * utilization
        - 0.45 * (inquiries - 2.0)
        - 0.5 * (past_due - 2.0)
        + 0.02 * (open_accounts - 5.5)
    )
    y = (rng.random(n_rows) < 1.0 / (1.0 + np.exp(-logit))).astype(np.int64)

    x = np.column_stack([balance, utilization, inquiries, past_due, open_accounts])
    data = Dataset(credit_schema(), x, y, protected, tuple(range(n_rows)))
    data.validate()
    return data


def write_csv(path, n_rows: int = 4000, seed: int = 7) -> None:
    data = make_credit_data(n_rows, seed)
    schema = data.schema
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join((*schema.feature_names, schema.target_name, schema.protected_name)))
        fh.write("\n")
        for i in range(data.n_rows):
            cells = [repr(float(v)) for v in data.x[i]]
            cells.append(str(int(data.y[i])))
            cells.append(str(int(data.y_a[i])))
            fh.write(",".join(cells))
            fh.write("\n")


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="Write a synthetic credit CSV.")
    parser.add_argument("path")
    parser.add_argument("--rows", type=int, default=4000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    write_csv(args.path, args.rows, args.seed)
    print(f"wrote {args.rows} rows to {args.path}")
