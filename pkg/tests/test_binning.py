import math

import numpy as np
import pytest

from fairbin.binning import (
    BinTable,
    EVENT_CONDITIONED,
    GROUP,
    Partition,
    accuracy_iv,
    build_bin_table,
    classify_iv_strength,
    enumerate_partitions,
    fairness_bound_range,
    fairness_iv,
    linear_accuracy_objective,
    linear_fairness_objective,
    merged_edges,
    partition_iv,
    solve_merge,
    superbin_values,
)
from fairbin.data import NUMERIC, DataSchema, Dataset
from fairbin.errors import DataError, FairnessUndefinedError, InfeasiblePartitionError
from fairbin.stumps import PrebinSpec

IV_SEPARATE = 1.6635532333438687  # 0.6*ln4 + (-0.6)*ln(1/4)
V_SINGLE = 0.8317766166719344  # 0.6*ln4
FAIR_SEPARATE = 3.5155593237379517  # 1.6*ln9

SEPARATE = Partition((0,))
MERGED = Partition(())


def two_bin_table(r_p=(8, 8), r_r=(2, 2)):
    return BinTable(np.array([8, 2]), np.array([2, 8]), np.array(r_p), np.array(r_r))


def brute_force_merge(values, epsilon=None):
    """Enumerate every feasible partition with the solver's accumulation order."""
    n = values.n_prebins
    best = None
    for partition in enumerate_partitions(n):
        spans = partition.superbins(n)
        if not all(values.feasible[b, a] for a, b in spans):
            continue
        acc, fair = 0.0, 0.0
        for a, b in spans:
            acc = acc + float(values.v[b, a])
            fair = fair + values.span_fairness(a, b)
        if epsilon is not None and fair > epsilon:
            continue
        cand = (acc, fair, partition.n_superbins(), partition.cut_after, partition)
        if best is None or _candidate_beats(cand, best):
            best = cand
    return best


def _candidate_beats(cand, best):
    if cand[0] != best[0]:
        return cand[0] > best[0]
    if cand[1] != best[1]:
        return cand[1] < best[1]
    if cand[2] != best[2]:
        return cand[2] < best[2]
    return cand[3] < best[3]


def random_table(rng, n, fairness_zeros=False):
    while True:
        r_e = rng.integers(0, 10, n)
        r_ne = rng.integers(0, 10, n)
        if r_e.sum() > 0 and r_ne.sum() > 0:
            break
    low = 0 if fairness_zeros else 1
    while True:
        r_p = rng.integers(low, 10, n)
        r_r = rng.integers(low, 10, n)
        if r_p.sum() > 0 and r_r.sum() > 0:
            return BinTable(r_e, r_ne, r_p, r_r)


# ---------------------------------------------------------------- bin tables


def test_build_bin_table_hand_tally():
    rows = [(1.0, 1, 1)] * 8 + [(1.0, 0, 0)] * 2 + [(9.0, 1, 0)] * 2 + [(9.0, 0, 1)] * 8
    x = np.array([[r[0]] for r in rows])
    y = np.array([r[1] for r in rows], dtype=np.int64)
    y_a = np.array([r[2] for r in rows], dtype=np.int64)
    schema = DataSchema(("v",), (NUMERIC,), "y", "g", "1")
    train = Dataset(schema, x, y, y_a, tuple(range(20)))
    prebins = PrebinSpec(0, (5.0,), (0.0, 0.0))
    table = build_bin_table(prebins, train, GROUP)
    assert table.r_e.tolist() == [8, 2]
    assert table.r_ne.tolist() == [2, 8]
    assert table.r_p.tolist() == [8, 8]
    assert table.r_r.tolist() == [2, 2]


def test_build_bin_table_event_conditioned():
    rows = [(1.0, 1, 1)] * 8 + [(1.0, 0, 0)] * 2 + [(9.0, 1, 0)] * 2 + [(9.0, 0, 1)] * 8
    x = np.array([[r[0]] for r in rows])
    y = np.array([r[1] for r in rows], dtype=np.int64)
    y_a = np.array([r[2] for r in rows], dtype=np.int64)
    schema = DataSchema(("v",), (NUMERIC,), "y", "g", "1")
    train = Dataset(schema, x, y, y_a, tuple(range(20)))
    prebins = PrebinSpec(0, (5.0,), (0.0, 0.0))
    table = build_bin_table(prebins, train, EVENT_CONDITIONED)
    # only event rows are split by group: bin1 has 8 protected events,
    # bin2 has 2 reference events
    assert table.r_p.tolist() == [8, 0]
    assert table.r_r.tolist() == [0, 2]


def test_build_bin_table_single_prebin_iv_zero():
    rng = np.random.default_rng(0)
    schema = DataSchema(("v",), (NUMERIC,), "y", "g", "1")
    x = rng.normal(size=(30, 1))
    y = rng.integers(0, 2, 30).astype(np.int64)
    y[:2] = [0, 1]
    y_a = rng.integers(0, 2, 30).astype(np.int64)
    y_a[:2] = [0, 1]
    train = Dataset(schema, x, y, y_a, tuple(range(30)))
    table = build_bin_table(PrebinSpec(0, (), (0.0,)), train, GROUP)
    assert table.n_prebins == 1
    assert accuracy_iv(table, MERGED) == 0.0


def test_build_bin_table_all_one_group_rejected():
    schema = DataSchema(("v",), (NUMERIC,), "y", "g", "1")
    x = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([0, 1, 0, 1], dtype=np.int64)
    y_a = np.zeros(4, dtype=np.int64)
    train = Dataset(schema, x, y, y_a, (0, 1, 2, 3))
    with pytest.raises(FairnessUndefinedError, match="fairness IV undefined"):
        build_bin_table(PrebinSpec(0, (2.5,), (0.0, 0.0)), train, GROUP)


# ------------------------------------------------------------ direct IV math


def test_partition_iv_two_bins_separate():
    table = two_bin_table()
    assert accuracy_iv(table, SEPARATE) == pytest.approx(IV_SEPARATE, abs=1e-12)


def test_partition_iv_full_merge_exactly_zero():
    assert accuracy_iv(two_bin_table(), MERGED) == 0.0


def test_partition_iv_equal_distributions_zero():
    table = BinTable(np.array([5, 5]), np.array([5, 5]), np.array([1, 1]), np.array([1, 1]))
    assert accuracy_iv(table, SEPARATE) == 0.0


def test_partition_iv_infeasible_superbin_raises():
    table = BinTable(np.array([0, 5]), np.array([3, 2]), np.array([1, 1]), np.array([1, 1]))
    with pytest.raises(InfeasiblePartitionError):
        accuracy_iv(table, SEPARATE)


def test_partition_iv_nonnegative():
    rng = np.random.default_rng(42)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        table = random_table(rng, n)
        for partition in enumerate_partitions(n):
            values = superbin_values(table)
            if all(values.feasible[b, a] for a, b in partition.superbins(n)):
                assert accuracy_iv(table, partition) >= 0.0


def test_fairness_iv_separate():
    table = two_bin_table(r_p=(9, 1), r_r=(1, 9))
    assert fairness_iv(table, SEPARATE) == pytest.approx(FAIR_SEPARATE, abs=1e-12)


def test_fairness_iv_proportional_groups_zero():
    table = two_bin_table(r_p=(6, 2), r_r=(3, 1))  # p^A == q^A in every bin
    for partition in enumerate_partitions(2):
        assert fairness_iv(table, partition) == pytest.approx(0.0, abs=1e-15)


# --------------------------------------------------------- superbin matrices


def test_superbin_values_two_bins():
    values = superbin_values(two_bin_table())
    assert values.v[0, 0] == pytest.approx(V_SINGLE, abs=1e-12)
    assert values.v[1, 1] == pytest.approx(V_SINGLE, abs=1e-12)
    assert values.v[1, 0] == 0.0  # full merge, exactly


def test_superbin_values_feasibility_mask():
    table = BinTable(np.array([0, 5]), np.array([3, 2]), np.array([1, 1]), np.array([1, 1]))
    values = superbin_values(table)
    assert not values.feasible[0, 0]  # zero events in bin 1
    assert values.feasible[1, 1]
    assert values.feasible[1, 0]


def test_superbin_fairness_undefined_span_is_infinite():
    table = BinTable(np.array([2, 3]), np.array([3, 2]), np.array([0, 4]), np.array([2, 2]))
    values = superbin_values(table)
    assert not values.fair_defined[0, 0]
    assert values.span_fairness(0, 0) == math.inf
    assert math.isfinite(values.span_fairness(0, 1))


# ------------------------------------------------------- linear objective


def test_linear_accuracy_objective_base_cases():
    values = superbin_values(two_bin_table())
    # separate bins: V_11 + V_22
    assert linear_accuracy_objective(values, SEPARATE) == pytest.approx(
        2 * V_SINGLE, abs=1e-12
    )
    # merged bins: V_22 + (V_21 - V_22) telescopes to V_21 = 0
    assert linear_accuracy_objective(values, MERGED) == pytest.approx(0.0, abs=1e-15)


def test_linear_matches_direct_iv_exhaustively():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = 6
        table = random_table(rng, n)
        values = superbin_values(table)
        for partition in enumerate_partitions(n):
            if not all(values.feasible[b, a] for a, b in partition.superbins(n)):
                continue
            assert linear_accuracy_objective(values, partition) == pytest.approx(
                accuracy_iv(table, partition), abs=1e-10
            )
            assert linear_fairness_objective(values, partition) == pytest.approx(
                fairness_iv(table, partition), abs=1e-10
            )


def test_linear_objective_with_zero_event_prebin():
    # the zero-event prebin can only appear inside a merged feasible span;
    # the stored zero filler for infeasible spans must not disturb the value
    table = BinTable(np.array([3, 0, 2]), np.array([1, 2, 1]), np.array([1, 1, 1]), np.array([1, 1, 1]))
    values = superbin_values(table)
    for partition in enumerate_partitions(3):
        spans = partition.superbins(3)
        feasible = all(values.feasible[b, a] for a, b in spans)
        assert feasible == all(
            int(table.r_e[a : b + 1].sum()) > 0 and int(table.r_ne[a : b + 1].sum()) > 0
            for a, b in spans
        )
        if feasible:
            assert any(a <= 1 <= b and b > a for a, b in spans)  # bin 2 only inside merges
            assert linear_accuracy_objective(values, partition) == pytest.approx(
                accuracy_iv(table, partition), abs=1e-10
            )


def test_linear_objective_infeasible_partition_raises():
    table = BinTable(np.array([0, 5]), np.array([3, 2]), np.array([1, 1]), np.array([1, 1]))
    values = superbin_values(table)
    with pytest.raises(InfeasiblePartitionError):
        linear_accuracy_objective(values, SEPARATE)


def test_linear_fairness_objective_infinite_when_group_absent():
    table = BinTable(np.array([2, 3]), np.array([3, 2]), np.array([0, 4]), np.array([2, 2]))
    values = superbin_values(table)
    assert linear_fairness_objective(values, SEPARATE) == math.inf
    assert linear_fairness_objective(values, MERGED) == pytest.approx(
        fairness_iv(table, MERGED), abs=1e-12
    )


# ------------------------------------------------------------------- solver


def test_solver_unconstrained_prefers_separation():
    values = superbin_values(two_bin_table())
    solution = solve_merge(values, None)
    assert solution.partition == SEPARATE
    assert solution.acc_iv == pytest.approx(IV_SEPARATE, abs=1e-12)


def test_solver_tight_bound_forces_full_merge():
    values = superbin_values(two_bin_table(r_p=(9, 1), r_r=(1, 9)))
    solution = solve_merge(values, 1.0)
    assert solution.partition == MERGED
    assert solution.acc_iv == 0.0
    assert solution.fair_iv == 0.0


def test_solver_epsilon_zero_keeps_zero_fairness():
    values = superbin_values(two_bin_table(r_p=(9, 1), r_r=(1, 9)))
    solution = solve_merge(values, 0.0)
    assert solution.fair_iv == 0.0
    assert solution.partition == MERGED


def test_solver_rejects_negative_epsilon():
    values = superbin_values(two_bin_table())
    with pytest.raises(ValueError):
        solve_merge(values, -0.5)


def test_solver_breaks_exact_ties_toward_fewer_superbins():
    table = BinTable(np.array([1, 1, 1]), np.array([1, 1, 1]), np.array([1, 1, 1]), np.array([1, 1, 1]))
    solution = solve_merge(superbin_values(table), None)
    assert solution.partition == MERGED
    assert solution.acc_iv == 0.0


def test_solver_breaks_accuracy_ties_toward_smaller_fairness():
    # accuracy side carries no signal, fairness side does: the unconstrained
    # solver must still pick the fairness-minimal partition among ties
    table = BinTable(np.array([2, 2]), np.array([2, 2]), np.array([9, 1]), np.array([1, 9]))
    solution = solve_merge(superbin_values(table), None)
    assert solution.partition == MERGED
    assert solution.fair_iv == 0.0


def test_solver_handles_only_full_merge_feasible():
    table = BinTable(np.array([0, 5]), np.array([3, 0]), np.array([1, 1]), np.array([1, 1]))
    solution = solve_merge(superbin_values(table), None)
    assert solution.partition == MERGED


def test_solver_matches_brute_force_randomized():
    rng = np.random.default_rng(101)
    for trial in range(40):
        n = int(rng.integers(2, 9))
        table = random_table(rng, n, fairness_zeros=True)
        values = superbin_values(table)
        upper = brute_force_merge(values, None)
        finite_upper = upper[1] if math.isfinite(upper[1]) else 5.0
        epsilons = [None, 0.0, finite_upper, finite_upper / 2, float(rng.uniform(0, max(finite_upper, 1e-9)))]
        for eps in epsilons:
            expected = brute_force_merge(values, eps)
            got = solve_merge(values, eps)
            assert got.acc_iv == expected[0], (trial, eps)
            assert got.fair_iv == expected[1], (trial, eps)
            assert got.partition == expected[4], (trial, eps)


def test_solver_monotone_in_epsilon():
    rng = np.random.default_rng(55)
    for _ in range(20):
        n = int(rng.integers(3, 9))
        table = random_table(rng, n)
        values = superbin_values(table)
        _, upper = fairness_bound_range(values)
        grid = sorted({0.0, upper / 4, upper / 2, upper, upper * 2})
        results = [solve_merge(values, e).acc_iv for e in grid]
        assert all(b >= a - 1e-15 for a, b in zip(results, results[1:]))


# ---------------------------------------------------------------- FIV range


def test_fairness_bound_range_two_bins():
    values = superbin_values(two_bin_table(r_p=(9, 1), r_r=(1, 9)))
    lo, hi = fairness_bound_range(values)
    assert lo == 0.0
    assert hi == pytest.approx(FAIR_SEPARATE, abs=1e-12)


def test_fairness_bound_range_no_group_signal():
    values = superbin_values(two_bin_table(r_p=(4, 4), r_r=(2, 2)))
    lo, hi = fairness_bound_range(values)
    assert lo == 0.0
    assert hi == 0.0


def test_upper_endpoint_reproduces_unconstrained():
    rng = np.random.default_rng(77)
    for _ in range(20):
        n = int(rng.integers(2, 8))
        table = random_table(rng, n)
        values = superbin_values(table)
        unconstrained = solve_merge(values, None)
        _, upper = fairness_bound_range(values)
        bounded = solve_merge(values, upper)
        assert bounded.partition == unconstrained.partition
        assert bounded.acc_iv == unconstrained.acc_iv


# ------------------------------------------------------------------- extras


def test_merged_edges_projects_cut_points():
    prebins = PrebinSpec(0, (1.0, 2.0, 3.0), (0.0, 0.0, 0.0, 0.0))
    assert merged_edges(prebins, Partition((1,))) == (2.0,)
    assert merged_edges(prebins, Partition(())) == ()
    assert merged_edges(prebins, Partition((0, 1, 2))) == (1.0, 2.0, 3.0)


@pytest.mark.parametrize(
    "iv,band",
    [
        (0.0, "none"),
        (0.019, "none"),
        (0.02, "weak"),
        (0.099, "weak"),
        (0.1, "moderate"),
        (0.299, "moderate"),
        (0.3, "strong"),
        (5.0, "strong"),
    ],
)
def test_classify_iv_strength(iv, band):
    assert classify_iv_strength(iv) == band


def test_classify_iv_strength_rejects_negative():
    with pytest.raises(ValueError):
        classify_iv_strength(-0.01)


def test_bin_table_validation():
    with pytest.raises(DataError):
        BinTable(np.array([0, 0]), np.array([1, 1]), np.array([1, 1]), np.array([1, 1]))
    with pytest.raises(FairnessUndefinedError):
        BinTable(np.array([1, 1]), np.array([1, 1]), np.array([0, 0]), np.array([1, 1]))
    with pytest.raises(DataError):
        BinTable(np.array([1, -1]), np.array([1, 1]), np.array([1, 1]), np.array([1, 1]))


def test_partition_validation():
    with pytest.raises(DataError):
        Partition((2, 1))
    with pytest.raises(DataError):
        Partition((-1,))
    with pytest.raises(DataError):
        Partition((3,)).superbins(3)


def test_enumerate_partitions_counts():
    assert sum(1 for _ in enumerate_partitions(1)) == 1
    assert sum(1 for _ in enumerate_partitions(6)) == 32
    assert {p.cut_after for p in enumerate_partitions(3)} == {
        (),
        (0,),
        (1,),
        (0, 1),
    }
