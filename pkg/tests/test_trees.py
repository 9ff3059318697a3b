"""CART split oracle, forest behavior, decomposition identity, boosting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyrocol.errors import EmptyDataError, UnfittedModelError
from pyrocol.trees import (
    CartParams,
    ForestModel,
    ForestParams,
    GbtParams,
    fit_cart,
    fit_forest,
    fit_gbt,
    forest_decompose,
    forest_predict,
    forest_proba,
    gbt_predict,
    gbt_raw,
)
from oracles import best_splits_by_enumeration


class TestCart:
    def test_pure_node_single_leaf(self):
        tree = fit_cart([[1.0], [2.0], [3.0]], [7.0, 7.0, 7.0])
        assert tree.n_nodes == 1
        assert tree.value[0, 0] == 7.0

    def test_one_dimensional_split(self):
        X = [[1.0], [2.0], [8.0], [9.0]]
        y = [0.0, 0.0, 1.0, 1.0]
        tree = fit_cart(X, y, CartParams(criterion="gini"))
        assert tree.feature[0] == 0
        assert 2.0 < tree.threshold[0] < 8.0
        pred = np.argmax(tree.predict_value(np.asarray(X)), axis=1)
        assert np.array_equal(pred, [0, 0, 1, 1])

    def test_min_samples_split_blocks(self):
        tree = fit_cart([[1.0], [2.0], [8.0], [9.0]], [0.0, 0.0, 1.0, 1.0],
                        CartParams(criterion="gini", min_samples_split=5))
        assert tree.n_nodes == 1

    def test_empty_data(self):
        with pytest.raises(EmptyDataError):
            fit_cart([], [])

    @given(st.data())
    @settings(max_examples=120, deadline=None)
    def test_split_matches_exhaustive_enumeration(self, data):
        # Values on a half-integer grid are exact binary floats, so the
        # rational-arithmetic oracle is noise-free. When the enumeration
        # optimum is unique the root split must equal it exactly; genuine
        # ties accept any of the tied optima.
        n = data.draw(st.integers(2, 8))
        k = data.draw(st.integers(1, 2))
        criterion = data.draw(st.sampled_from(["gini", "variance"]))
        X = [[data.draw(st.integers(0, 9)) / 2.0 for _ in range(k)] for _ in range(n)]
        if criterion == "gini":
            y = [float(data.draw(st.integers(0, 1))) for _ in range(n)]
        else:
            y = [data.draw(st.integers(-10, 10)) / 2.0 for _ in range(n)]
        tree = fit_cart(X, y, CartParams(criterion=criterion))
        _, optima = best_splits_by_enumeration(X, y, criterion)
        if not optima:
            assert tree.n_nodes == 1
        else:
            chosen = (int(tree.feature[0]), float(tree.threshold[0]))
            assert chosen in optima
            if len(optima) == 1:
                assert chosen == optima[0]

    def test_max_leaf_nodes_cap(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(200, 3))
        y = rng.normal(size=200)
        tree = fit_cart(X, y, CartParams(max_leaf_nodes=10))
        assert tree.n_leaves <= 10

    def test_max_depth_cap(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(128, 2))
        y = rng.normal(size=128)
        tree = fit_cart(X, y, CartParams(max_depth=3))

        def depth(node, d=0):
            if tree.feature[node] < 0:
                return d
            return max(depth(tree.left[node], d + 1), depth(tree.right[node], d + 1))

        assert depth(0) <= 3


def blob_data(seed=0, n=40):
    rng = np.random.default_rng(seed)
    X0 = rng.normal(loc=(-2.0, -2.0), scale=0.5, size=(n // 2, 2))
    X1 = rng.normal(loc=(2.0, 2.0), scale=0.5, size=(n // 2, 2))
    X = np.vstack([X0, X1])
    y = np.array([0.0] * (n // 2) + [1.0] * (n // 2))
    return X, y


class TestForest:
    def test_degenerate_forest_equals_cart(self):
        X, y = blob_data(3)
        params = ForestParams(n_trees=1, bootstrap=False, features_per_split=2,
                              max_leaf_nodes=50, min_samples_split=5, seed=0)
        forest = fit_forest(X, y, "classification", params)
        cart = fit_cart(X, y, CartParams(criterion="gini", max_leaf_nodes=50,
                                         min_samples_split=5))
        assert np.array_equal(forest.trees[0].feature, cart.feature)
        assert np.array_equal(forest.trees[0].threshold, cart.threshold)
        assert np.allclose(forest_proba(forest, X)[:, 1],
                           cart.predict_value(X)[:, 1])

    def test_separable_blobs_accuracy(self):
        X, y = blob_data(7)
        forest = fit_forest(X, y, "classification", ForestParams(n_trees=25, seed=1))
        acc = float(np.mean(forest_predict(forest, X) == y))
        assert acc >= 0.95

    def test_same_seed_bit_identical(self):
        X, y = blob_data(11)
        p = ForestParams(n_trees=10, seed=42)
        a = fit_forest(X, y, "classification", p)
        b = fit_forest(X, y, "classification", p)
        for ta, tb in zip(a.trees, b.trees):
            assert np.array_equal(ta.feature, tb.feature)
            assert np.array_equal(ta.threshold, tb.threshold)
            assert np.array_equal(ta.value, tb.value)

    def test_majority_two_of_three(self):
        X, y = blob_data(5)
        forest = fit_forest(X, y, "classification", ForestParams(n_trees=3, seed=2))
        probs = np.stack([t.predict_value(X) for t in forest.trees])
        votes = np.argmax(probs, axis=2)
        hard_majority = (votes.sum(axis=0) >= 2).astype(float)
        # with pure leaves (separable blobs) averaged frequencies match the vote
        assert np.array_equal(forest_predict(forest, X), hard_majority)

    def test_one_tree_forest_identity(self):
        X, y = blob_data(9)
        forest = fit_forest(X, y, "classification", ForestParams(n_trees=1, seed=3))
        tree_pred = np.argmax(forest.trees[0].predict_value(X), axis=1).astype(float)
        assert np.array_equal(forest_predict(forest, X), tree_pred)

    def test_regression_mean_of_trees(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(60, 3))
        y = X[:, 0] * 2.0 + rng.normal(scale=0.1, size=60)
        forest = fit_forest(X, y, "regression", ForestParams(n_trees=5, seed=4))
        per_tree = np.stack([t.predict_value(X)[:, 0] for t in forest.trees])
        assert np.allclose(forest_predict(forest, X), per_tree.mean(axis=0), atol=1e-12)

    def test_permutation_insensitive_with_fixed_indices(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(50, 3))
        y = (X[:, 0] + X[:, 1] > 0).astype(float)
        n_trees = 8
        boot = rng.integers(0, 50, size=(n_trees, 50))
        params = ForestParams(n_trees=n_trees, seed=6)
        a = fit_forest(X, y, "classification", params, bootstrap_indices=boot)
        perm = rng.permutation(50)
        inverse = np.empty(50, dtype=int)
        inverse[perm] = np.arange(50)
        b = fit_forest(X[perm], y[perm], "classification", params,
                       bootstrap_indices=inverse[boot])
        grid = rng.normal(size=(40, 3))
        assert np.allclose(forest_proba(a, grid), forest_proba(b, grid), atol=1e-12)

    def test_unfitted(self):
        model = ForestModel([], "regression", [], np.zeros(1), ForestParams())
        with pytest.raises(UnfittedModelError):
            forest_predict(model, np.zeros((1, 1)))


class TestForestDecompose:
    def test_single_leaf_all_zero(self):
        forest = fit_forest([[1.0], [2.0]], [5.0, 5.0], "regression",
                            ForestParams(n_trees=3, seed=0))
        exp = forest_decompose(forest, [1.5])
        assert all(c == 0.0 for c in exp.contributions.values())
        assert exp.baseline == exp.prediction == 5.0

    def test_depth_one_credits_single_feature(self):
        X = np.array([[0.0, 7.0], [1.0, 7.0], [10.0, 7.0], [11.0, 7.0]])
        y = np.array([0.0, 0.0, 10.0, 10.0])
        forest = fit_forest(X, y, "regression",
                            ForestParams(n_trees=1, bootstrap=False,
                                         features_per_split=2, seed=0))
        exp = forest_decompose(forest, [10.5, 7.0])
        assert exp.contributions["x1"] == 0.0
        assert exp.baseline + exp.contributions["x0"] == pytest.approx(exp.prediction,
                                                                       abs=1e-12)

    def test_identity_on_toy_forest(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(80, 4))
        y = X[:, 0] - 2.0 * X[:, 2] + rng.normal(scale=0.2, size=80)
        forest = fit_forest(X, y, "regression", ForestParams(n_trees=3, seed=8))
        for row in rng.normal(size=(50, 4)):
            exp = forest_decompose(forest, row)
            pred = forest_predict(forest, row.reshape(1, -1))[0]
            assert exp.total() == pytest.approx(pred, abs=1e-12)
            assert exp.prediction == pytest.approx(pred, abs=1e-12)

    def test_classification_identity(self):
        X, y = blob_data(13, n=60)
        forest = fit_forest(X, y, "classification", ForestParams(n_trees=7, seed=13))
        rng = np.random.default_rng(0)
        for row in rng.normal(scale=2.0, size=(30, 2)):
            exp = forest_decompose(forest, row)
            proba = forest_proba(forest, row.reshape(1, -1))[0, 1]
            assert exp.total() == pytest.approx(proba, abs=1e-12)


class TestGbt:
    def test_one_stage_full_fit(self):
        X = np.array([[0.0], [1.0], [10.0], [11.0]])
        y = np.array([2.0, 2.0, 8.0, 8.0])
        model = fit_gbt(X, y, GbtParams(n_stages=1, learning_rate=1.0,
                                        max_depth=4, reg_lambda=0.0))
        assert np.allclose(gbt_predict(model, X), y, atol=1e-9)

    def test_constant_targets_zero_stages_effect(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([4.0, 4.0, 4.0])
        model = fit_gbt(X, y, GbtParams(n_stages=10))
        assert model.base_score == 4.0
        assert np.allclose(gbt_predict(model, X), 4.0, atol=1e-12)

    def test_loss_non_increasing_squared(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(60, 3))
        y = X[:, 0] * 3.0 + rng.normal(scale=0.5, size=60)
        model = fit_gbt(X, y, GbtParams(n_stages=60, max_depth=3))
        losses = np.array(model.train_losses)
        assert np.all(np.diff(losses) <= 1e-9)

    def test_loss_non_increasing_logistic(self):
        X, y = blob_data(6, n=50)
        model = fit_gbt(X, y, GbtParams(n_stages=60, max_depth=3), loss="logistic")
        losses = np.array(model.train_losses)
        assert np.all(np.diff(losses) <= 1e-9)

    def test_cutoff_zero_is_base(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(30, 2))
        y = rng.normal(size=30)
        model = fit_gbt(X, y, GbtParams(n_stages=5))
        assert np.allclose(gbt_predict(model, X, n_stages=0), y.mean(), atol=1e-12)

    def test_logistic_balanced_prior(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0.0, 1.0, 0.0, 1.0])
        model = fit_gbt(X, y, GbtParams(n_stages=3), loss="logistic")
        assert gbt_predict(model, X, n_stages=0) == pytest.approx(0.5, abs=1e-12)

    def test_incremental_accumulation(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(40, 2))
        y = X[:, 0] + rng.normal(scale=0.3, size=40)
        model = fit_gbt(X, y, GbtParams(n_stages=20, max_depth=3))
        eta = model.params.learning_rate
        acc = np.full(len(X), model.base_score)
        for k, tree in enumerate(model.stages, start=1):
            acc = acc + eta * tree.predict_value(X)[:, 0]
            assert np.allclose(acc, gbt_raw(model, X, n_stages=k), atol=1e-9)
        assert np.allclose(acc, gbt_predict(model, X), atol=1e-9)


class TestAdjacentFloats:
    def test_split_between_adjacent_floats_keeps_children_nonempty(self):
        import warnings
        a = 1.0
        b = np.nextafter(a, 2.0)  # midpoint rounds onto b
        X = np.array([[a], [a], [b], [b]])
        y = np.array([0.0, 0.0, 10.0, 10.0])
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            tree = fit_cart(X, y)
        assert tree.n_leaves == 2
        left, right = tree.left[0], tree.right[0]
        assert tree.n_samples[left] == 2 and tree.n_samples[right] == 2
        assert np.allclose(tree.predict_value(X)[:, 0], y)
