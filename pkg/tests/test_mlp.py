"""PReLU, forward/backward with finite-difference oracle, Adam, training."""

import numpy as np
import pytest

from pyrocol.errors import DimensionMismatchError, EmptyDataError, ShapeMismatchError
from pyrocol.mlp import (
    AdamState,
    MlpModel,
    MlpParams,
    _loss_value,
    adam_step,
    backward,
    fit_mlp,
    forward,
    init_mlp,
    mlp_predict,
    prelu,
)


class TestPrelu:
    def test_positive_branch(self):
        assert prelu(3.0, 0.25) == 3.0

    def test_negative_branch(self):
        assert prelu(-2.0, 0.25) == -0.5

    def test_origin(self):
        for alpha in (-1.0, 0.0, 0.25, 7.0):
            assert prelu(0.0, alpha) == 0.0


class TestForward:
    def test_zero_weights_give_link_of_bias(self):
        m = MlpModel(weights=[np.zeros((3, 2)), np.zeros((2, 1))],
                     biases=[np.zeros(2), np.array([1.5])],
                     alphas=[np.full(2, 0.25)], link="identity")
        out = forward(m, np.ones((4, 3)))
        assert np.allclose(out, 1.5)

    def test_linear_layer_is_dot_product(self):
        w = np.array([[2.0], [3.0]])
        m = MlpModel(weights=[w], biases=[np.array([0.5])], alphas=[],
                     link="identity")
        X = np.array([[1.0, 1.0], [2.0, 0.0]])
        assert np.allclose(forward(m, X), X @ w[:, 0] + 0.5)

    def test_scalar_recomputation_oracle(self):
        # independent loop-based re-implementation of the same arithmetic
        rng = np.random.default_rng(42)
        params = MlpParams(hidden=(3, 2), seed=7)
        m = init_mlp(4, params, "identity")
        x = rng.normal(size=4)

        acts = list(x)
        for layer in range(len(m.weights)):
            w, b = m.weights[layer], m.biases[layer]
            nxt = []
            for j in range(w.shape[1]):
                net = b[j] + sum(acts[i] * w[i, j] for i in range(w.shape[0]))
                if layer < len(m.alphas):
                    alpha = m.alphas[layer][j]
                    net = net if net > 0 else alpha * net
                nxt.append(net)
            acts = nxt
        assert forward(m, x)[0] == pytest.approx(acts[0], rel=1e-12)

    def test_dimension_mismatch(self):
        m = init_mlp(4, MlpParams(hidden=(3,)), "identity")
        with pytest.raises(DimensionMismatchError):
            forward(m, np.ones((2, 5)))

    def test_sigmoid_outputs_strictly_open(self):
        m = init_mlp(2, MlpParams(hidden=(4,), seed=0), "sigmoid")
        m.biases[-1][:] = 1e6  # force extreme logits
        out = forward(m, np.ones((1, 2)))
        assert 0.0 < out[0] < 1.0


def finite_difference_check(arch, seed, loss, h=1e-5):
    rng = np.random.default_rng(seed + 1000)
    link = "sigmoid" if loss == "logistic" else "identity"
    m = init_mlp(5, MlpParams(hidden=arch, seed=seed), link)
    X = rng.normal(size=(6, 5))
    y = rng.integers(0, 2, size=6).astype(float) if loss == "logistic" \
        else rng.normal(size=6)
    gw, gb, ga = backward(m, X, y, loss)
    analytic = gw + gb + ga
    worst = 0.0
    for pi, p in enumerate(m.parameters()):
        flat = p.ravel()
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            up = _loss_value(y, forward(m, X), loss)
            flat[k] = orig - h
            down = _loss_value(y, forward(m, X), loss)
            flat[k] = orig
            fd = (up - down) / (2.0 * h)
            an = analytic[pi].ravel()[k]
            denom = max(1e-8, abs(an) + abs(fd))
            worst = max(worst, abs(an - fd) / denom)
    return worst


class TestBackward:
    @pytest.mark.parametrize("arch", [(4,), (6, 3), (5, 4, 3)])
    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_gradients_match_finite_differences(self, arch, seed):
        loss = "logistic" if seed % 2 else "squared"
        assert finite_difference_check(arch, seed, loss) < 1e-4

    def test_zero_loss_point_zero_gradients(self):
        m = MlpModel(weights=[np.array([[2.0]])], biases=[np.array([0.0])],
                     alphas=[], link="identity")
        X = np.array([[1.0], [2.0]])
        y = np.array([2.0, 4.0])
        gw, gb, ga = backward(m, X, y, "squared")
        assert np.allclose(gw[0], 0.0) and np.allclose(gb[0], 0.0)

    def test_dead_input_column_zero_gradient(self):
        m = init_mlp(3, MlpParams(hidden=(4,), seed=5), "identity")
        rng = np.random.default_rng(5)
        X = rng.normal(size=(8, 3))
        X[:, 1] = 0.0
        y = rng.normal(size=8)
        gw, _, _ = backward(m, X, y, "squared")
        assert np.allclose(gw[0][1, :], 0.0)


class TestAdam:
    def test_zero_gradient_no_change(self):
        params = [np.array([1.0, 2.0])]
        state = AdamState.for_params(params)
        new, state2 = adam_step(state, params, [np.zeros(2)])
        assert np.array_equal(new[0], params[0])
        assert state2.step == 1

    def test_first_step_direction_and_scale(self):
        params = [np.array([0.0])]
        state = AdamState.for_params(params, learning_rate=0.03)
        new, _ = adam_step(state, params, [np.array([2.5])])
        # bias correction makes m_hat/sqrt(v_hat) = sign(g) on step one
        assert new[0][0] == pytest.approx(-0.03, rel=1e-6)

    def test_purity(self):
        params = [np.array([1.0])]
        state = AdamState.for_params(params)
        out1 = adam_step(state, params, [np.array([0.5])])
        out2 = adam_step(state, params, [np.array([0.5])])
        assert np.array_equal(out1[0][0], out2[0][0])
        assert out1[1].step == out2[1].step

    def test_shape_mismatch(self):
        params = [np.zeros(3)]
        state = AdamState.for_params(params)
        with pytest.raises(ShapeMismatchError):
            adam_step(state, params, [np.zeros(4)])


class TestFitMlp:
    def test_blobs_accuracy(self):
        rng = np.random.default_rng(0)
        X0 = rng.normal(loc=(0.2, 0.2), scale=0.08, size=(100, 2))
        X1 = rng.normal(loc=(0.8, 0.8), scale=0.08, size=(100, 2))
        X = np.vstack([X0, X1])
        y = np.array([0.0] * 100 + [1.0] * 100)
        m = fit_mlp(X, y, MlpParams(hidden=(8,), epochs=200, seed=1,
                                    batch_size=16), loss="logistic")
        acc = np.mean((mlp_predict(m, X) >= 0.5) == (y == 1))
        assert acc >= 0.95

    def test_linear_target_small_rmse(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(0, 1, size=(150, 1))
        y = 2.0 * X[:, 0]
        m = fit_mlp(X, y, MlpParams(hidden=(16,), epochs=300, seed=2,
                                    batch_size=16))
        rmse = float(np.sqrt(np.mean((mlp_predict(m, X) - y) ** 2)))
        assert rmse < 0.05

    def test_zero_epochs_is_initialization(self):
        X = np.random.default_rng(3).normal(size=(20, 3))
        y = np.zeros(20)
        params = MlpParams(hidden=(4,), epochs=0, seed=9)
        m = fit_mlp(X, y, params)
        init = init_mlp(3, params, "identity")
        for a, b in zip(m.parameters(), init.parameters()):
            assert np.array_equal(a, b)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(60, 2))
        y = X[:, 0] - X[:, 1]
        p = MlpParams(hidden=(6,), epochs=30, seed=11, batch_size=8)
        m1 = fit_mlp(X, y, p)
        m2 = fit_mlp(X, y, p)
        for a, b in zip(m1.parameters(), m2.parameters()):
            assert np.array_equal(a, b)

    def test_empty_data(self):
        with pytest.raises(EmptyDataError):
            fit_mlp(np.empty((0, 2)), np.empty(0))

    def test_convex_case_monotone_loss(self):
        # linear model (no hidden layers), squared loss, small step, full batch
        rng = np.random.default_rng(6)
        X = rng.normal(size=(50, 3))
        y = X @ np.array([1.0, -2.0, 0.5]) + 3.0
        m = fit_mlp(X, y, MlpParams(hidden=(), epochs=80, seed=6,
                                    batch_size=50, learning_rate=0.003,
                                    patience=None, val_fraction=0.0))
        losses = np.array(m.train_losses)
        assert np.all(np.diff(losses) <= 1e-12)

    def test_sigmoid_outputs_in_open_interval(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(0, 1, size=(40, 2))
        y = (X[:, 0] > 0.5).astype(float)
        m = fit_mlp(X, y, MlpParams(hidden=(4,), epochs=50, seed=8), loss="logistic")
        out = mlp_predict(m, rng.uniform(-5, 5, size=(200, 2)))
        assert np.all(out > 0.0) and np.all(out < 1.0)
