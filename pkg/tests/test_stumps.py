import numpy as np
import pytest

from fairbin.data import NUMERIC, DataSchema, Dataset
from fairbin.stumps import (
    PrebinSpec,
    Stump,
    StumpEnsemble,
    StumpParams,
    candidate_thresholds,
    extract_prebins,
    fit_stumps,
    predict_logit,
    step_function_logit,
)


def dataset(x, y, y_a=None):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    names = tuple(f"f{j}" for j in range(x.shape[1]))
    schema = DataSchema(names, (NUMERIC,) * x.shape[1], "y", "g", "1")
    y = np.asarray(y, dtype=np.int64)
    if y_a is None:
        y_a = np.zeros_like(y)
        y_a[::2] = 1
    return Dataset(schema, x, y, np.asarray(y_a, dtype=np.int64), tuple(range(len(y))))


def logloss(logit, y):
    return float(np.mean(np.logaddexp(0.0, logit) - y * logit))


def test_candidate_thresholds_midpoints():
    values = np.array([1.0, 2.0, 2.0, 5.0])
    assert candidate_thresholds(values, 256).tolist() == [1.5, 3.5]
    assert candidate_thresholds(np.array([3.0, 3.0]), 256).size == 0


def test_candidate_thresholds_capped_by_max_bins():
    values = np.arange(1000.0)
    edges = candidate_thresholds(values, 16)
    assert len(edges) <= 15
    assert edges.min() > 0.0 and edges.max() < 999.0
    assert np.all(np.diff(edges) > 0)


def test_first_round_leaf_values_closed_form():
    # 4 events left of the split, 4 non-events right; at p=0.5 each event
    # contributes g=-0.5, h=0.25, so G_L=-2, H_L=1 and the raw leaf under
    # lambda=1 is -(-2)/(1+1) = 1.0, stored as 0.3 after learning-rate scaling
    data = dataset([1, 2, 3, 4, 6, 7, 8, 9], [1, 1, 1, 1, 0, 0, 0, 0])
    params = StumpParams(n_estimators=1, learning_rate=0.3, reg_lambda=1.0, reg_alpha=0.0)
    model = fit_stumps(data, params)
    assert len(model.stumps) == 1
    stump = model.stumps[0]
    assert stump.threshold == 5.0
    assert stump.left_value == pytest.approx(0.3, abs=1e-15)
    assert stump.right_value == pytest.approx(-0.3, abs=1e-15)


def test_monotone_constraint_rejects_only_useful_split():
    data = dataset([1, 2, 3, 4], [1, 1, 0, 0])
    params = StumpParams(n_estimators=5, monotone=(1,))
    model = fit_stumps(data, params)
    assert model.is_trivial
    assert predict_logit(model, data).tolist() == [0.0, 0.0, 0.0, 0.0]


def test_constant_features_give_trivial_ensemble():
    data = dataset(np.ones(6), [1, 0, 1, 0, 1, 0])
    model = fit_stumps(data, StumpParams(n_estimators=3))
    assert model.is_trivial


def test_separable_data_perfectly_ordered():
    rng = np.random.default_rng(5)
    x = np.concatenate([rng.uniform(0, 4.9, 10), rng.uniform(5.1, 10, 10)])
    y = (x >= 5.0).astype(np.int64)
    data = dataset(x, y)
    model = fit_stumps(data, StumpParams(n_estimators=50))
    scores = predict_logit(model, data)
    assert scores[y == 1].min() > scores[y == 0].max()


def test_predict_single_stump_boundary():
    params = StumpParams(n_estimators=1)
    model = StumpEnsemble(0.0, (Stump(0, 5.0, 0.3, -0.1),), params, ("f0",))
    rows = dataset([4.0, 5.0], [0, 1])
    assert predict_logit(model, rows).tolist() == [0.3, -0.1]


def test_predict_empty_ensemble_is_base_score():
    model = StumpEnsemble(0.0, (), StumpParams(), ("f0",))
    rows = dataset([1.0, 2.0, 3.0], [0, 1, 0])
    assert predict_logit(model, rows).tolist() == [0.0, 0.0, 0.0]


def test_extract_prebins_dedups_and_sorts():
    params = StumpParams()
    stumps = (
        Stump(0, 3.0, 0.1, 0.2),
        Stump(0, 3.0, -0.05, 0.05),
        Stump(0, 7.0, 0.0, 0.3),
    )
    model = StumpEnsemble(0.0, stumps, params, ("f0",))
    rows = dataset([1.0, 4.0, 8.0], [0, 1, 1])
    spec = extract_prebins(model, rows)[0]
    assert spec.cuts == (3.0, 7.0)
    assert spec.n_prebins == 3
    # interval values: below 3 -> 0.1-0.05+0.0; [3,7) -> 0.2+0.05+0.0; >=7 adds 0.3
    assert spec.accumulated_values == pytest.approx((0.05, 0.25, 0.55))


def test_extract_prebins_zero_stump_feature():
    model = StumpEnsemble(0.0, (Stump(0, 2.0, -0.1, 0.1),), StumpParams(), ("f0", "f1"))
    rows = dataset(np.array([[1.0, 9.0], [3.0, 9.0]]), [0, 1])
    specs = extract_prebins(model, rows)
    assert specs[1].cuts == ()
    assert specs[1].accumulated_values == (0.0,)


def test_additivity_of_step_functions():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(200, 3))
    y = (x[:, 0] + 0.5 * x[:, 1] + rng.normal(scale=0.5, size=200) > 0).astype(np.int64)
    data = dataset(x, y)
    model = fit_stumps(data, StumpParams(n_estimators=40, max_bins=16))
    assert not model.is_trivial
    specs = extract_prebins(model, data)
    direct = predict_logit(model, data)
    via_steps = step_function_logit(specs, data, model.base_score)
    assert np.max(np.abs(direct - via_steps)) <= 1e-10


@pytest.mark.parametrize("direction", [1, -1])
def test_monotone_accumulated_values(direction):
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 10, 400)
    trend = direction * x + rng.normal(scale=2.0, size=400)
    y = (trend > np.median(trend)).astype(np.int64)
    data = dataset(x, y)
    model = fit_stumps(data, StumpParams(n_estimators=60, max_bins=32, monotone=(direction,)))
    spec = extract_prebins(model, data)[0]
    values = np.asarray(spec.accumulated_values)
    diffs = np.diff(values) * direction
    assert np.all(diffs >= -1e-12)


def test_training_logloss_nonincreasing():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(300, 2))
    y = (x[:, 0] - x[:, 1] + rng.normal(scale=1.0, size=300) > 0).astype(np.int64)
    data = dataset(x, y)
    model = fit_stumps(data, StumpParams(n_estimators=80, max_bins=32))
    logit = np.zeros(data.n_rows)
    losses = [logloss(logit, data.y)]
    for stump in model.stumps:
        below = data.x[:, stump.feature] < stump.threshold
        logit = logit + np.where(below, stump.left_value, stump.right_value)
        losses.append(logloss(logit, data.y))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_thresholds_strictly_inside_range():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(100, 2))
    y = (x[:, 0] > 0).astype(np.int64)
    data = dataset(x, y)
    model = fit_stumps(data, StumpParams(n_estimators=30, max_bins=8))
    for stump in model.stumps:
        col = data.x[:, stump.feature]
        assert col.min() < stump.threshold < col.max()


def test_params_validation():
    from fairbin.errors import DataError

    with pytest.raises(DataError):
        StumpParams(n_estimators=0)
    with pytest.raises(DataError):
        StumpParams(learning_rate=0.0)
    with pytest.raises(DataError):
        StumpParams(max_bins=1)
    with pytest.raises(DataError):
        StumpParams(monotone=(2,))
