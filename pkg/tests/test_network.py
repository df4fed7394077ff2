import math

import numpy as np
import pytest

from stocksense.data import WindowedDataset
from stocksense.network import (
    AdamOptimizer,
    ConvParams,
    FusionNetwork,
    FusionParams,
    LstmParams,
    LstmState,
    TrainConfig,
    TrainingDivergedError,
    backward,
    conv1d_forward,
    forward,
    fusion_forward,
    loss_mse,
    lstm_forward,
    lstm_step,
    predict_series,
    temporal_pool,
    train,
)


def zero_lstm(H=1, F=5):
    z = lambda *shape: np.zeros(shape)
    return LstmParams(
        W_f=z(H, H + F), W_i=z(H, H + F), W_c=z(H, H + F), W_o=z(H, H + F),
        b_f=z(H), b_i=z(H), b_c=z(H), b_o=z(H),
    )


class TestLstmStep:
    def test_zero_fixed_point(self):
        params = zero_lstm()
        state = lstm_step(params, np.ones(5), LstmState(np.zeros(1), np.zeros(1)))
        assert state.C[0] == 0.0
        assert state.h[0] == 0.0

    def test_scalar_hand_evaluation(self):
        # zero params, C0 = 1: f = i = o = 0.5, C1 = 0.5, h1 = 0.5 tanh 0.5
        params = zero_lstm()
        state = lstm_step(params, np.ones(5), LstmState(np.zeros(1), np.ones(1)))
        assert state.C[0] == pytest.approx(0.5)
        assert state.h[0] == pytest.approx(0.5 * math.tanh(0.5))
        assert state.h[0] == pytest.approx(0.2311, abs=1e-4)

    def test_saturated_forget_gate_preserves_cell(self):
        params = zero_lstm()
        params.b_f[:] = 50.0  # forget gate ~1
        params.b_i[:] = -50.0  # input gate ~0
        C0 = np.array([0.7])
        state = LstmState(np.zeros(1), C0.copy())
        for _ in range(20):
            state = lstm_step(params, np.ones(5), state)
        assert state.C[0] == pytest.approx(0.7, abs=1e-6)

    def test_non_finite_input_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            lstm_step(zero_lstm(), np.array([np.nan] * 5),
                      LstmState(np.zeros(1), np.zeros(1)))

    def test_gate_ranges(self):
        rng = np.random.default_rng(0)
        H, F = 4, 5
        params = LstmParams(
            *(rng.normal(size=(H, H + F)) for _ in range(4)),
            *(rng.normal(size=H) for _ in range(4)),
        )
        state = LstmState(np.zeros(H), np.zeros(H))
        for _ in range(10):
            state = lstm_step(params, rng.normal(size=F), state)
            assert np.all(np.abs(state.h) < 1.0)


class TestLstmForward:
    def test_single_step_composition(self):
        rng = np.random.default_rng(1)
        H, F = 3, 5
        params = LstmParams(
            *(rng.normal(size=(H, H + F)) * 0.3 for _ in range(4)),
            *(rng.normal(size=H) * 0.3 for _ in range(4)),
        )
        x = rng.normal(size=(1, 1, F))
        h, _ = lstm_forward(params, x)
        step = lstm_step(params, x[0, 0], LstmState(np.zeros(H), np.zeros(H)))
        np.testing.assert_allclose(h[0], step.h)

    def test_zero_params_zero_output(self):
        h, _ = lstm_forward(zero_lstm(H=2), np.ones((3, 6, 5)))
        assert not h.any()

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        params = zero_lstm(H=2)
        w = rng.normal(size=(2, 4, 5))
        h1, _ = lstm_forward(params, w)
        h2, _ = lstm_forward(params, w)
        np.testing.assert_array_equal(h1, h2)


class TestConv:
    def test_identity_kernel(self):
        kernels = np.zeros((1, 3, 5))
        kernels[0, 1, 0] = 1.0  # center tap on channel 0
        params = ConvParams(kernels, np.zeros(1), "linear")
        w = np.random.default_rng(3).normal(size=(1, 6, 5))
        feat, _ = conv1d_forward(params, w)
        np.testing.assert_array_equal(feat[0, :, 0], w[0, 1:-1, 0])

    def test_bias_only(self):
        params = ConvParams(np.zeros((2, 3, 5)), np.array([1.5, -2.0]), "linear")
        feat, _ = conv1d_forward(params, np.ones((1, 5, 5)))
        np.testing.assert_array_equal(feat[0, :, 0], 1.5)
        np.testing.assert_array_equal(feat[0, :, 1], -2.0)

    def test_hand_cross_correlation_relu(self):
        kernels = np.zeros((1, 3, 5))
        kernels[0, :, 0] = 1.0  # [1, 1, 1] on channel 0
        params = ConvParams(kernels, np.zeros(1), "relu")
        w = np.zeros((1, 3, 5))
        w[0, :, 0] = [1.0, -2.0, 3.0]
        feat, _ = conv1d_forward(params, w)
        assert feat.shape == (1, 1, 1)
        assert feat[0, 0, 0] == 2.0  # relu(1 - 2 + 3)

    def test_window_shorter_than_kernel(self):
        params = ConvParams(np.zeros((1, 5, 5)), np.zeros(1), "linear")
        with pytest.raises(ValueError, match="shorter"):
            conv1d_forward(params, np.ones((1, 3, 5)))

    def test_temporal_pool(self):
        feat = np.array([[[1.0], [3.0]]])  # (1, 2, 1)
        assert temporal_pool(feat)[0, 0] == 2.0
        single = np.array([[[4.0, 5.0]]])
        np.testing.assert_array_equal(temporal_pool(single), [[4.0, 5.0]])
        with pytest.raises(ValueError):
            temporal_pool(np.zeros((1, 0, 2)))


class TestFusion:
    def test_pass_through(self):
        params = FusionParams(np.zeros(1), np.array([1.0]), np.zeros(1))
        y = fusion_forward(params, np.array([[0.9]]), np.array([[0.7]]))
        assert y[0] == pytest.approx(0.7)

    def test_all_zero(self):
        params = FusionParams(np.zeros(2), np.zeros(3), np.zeros(1))
        assert fusion_forward(params, np.zeros((1, 2)), np.zeros((1, 3)))[0] == 0.0

    def test_scalar_dot_product(self):
        params = FusionParams(np.array([2.0]), np.array([1.0]), np.array([0.1]))
        y = fusion_forward(params, np.array([[0.5]]), np.array([[0.25]]))
        assert y[0] == pytest.approx(1.35)


class TestForward:
    def test_zero_network_predicts_bias(self):
        net = FusionNetwork.initialize(3, 2, 1, 4, seed=0)
        for _, p in net.param_items():
            p[...] = 0.0
        net.fusion.b[0] = 0.42
        pred, _ = forward(net, np.random.default_rng(0).normal(size=(4, 5)))
        assert pred == pytest.approx(0.42)

    def test_deterministic_and_finite(self):
        net = FusionNetwork.initialize(4, 3, 1, 6, seed=1)
        w = np.random.default_rng(1).normal(size=(6, 5))
        p1, _ = forward(net, w)
        p2, _ = forward(net, w)
        assert p1 == p2
        assert np.isfinite(p1)

    def test_shape_mismatch(self):
        net = FusionNetwork.initialize(3, 2, 1, 4, seed=0)
        with pytest.raises(ValueError, match="shape"):
            forward(net, np.zeros((5, 5)))


class TestLoss:
    def test_values(self):
        assert loss_mse(1.0, 1.0) == 0.0
        assert loss_mse(3.0, 1.0) == 4.0

    def test_gradient_identity(self):
        # d/dpred (pred - target)^2 = 2 (pred - target)
        net = FusionNetwork.initialize(2, 2, 1, 3, seed=2)
        w = np.random.default_rng(4).normal(size=(3, 5))
        pred, cache = forward(net, w)
        grads = backward(net, 1.0, cache)
        assert grads["fusion.b"][0] == pytest.approx(2 * (pred - 1.0))


def finite_difference_check(net, window, target, eps=1e-5):
    _, cache = forward(net, window)
    grads = backward(net, target, cache)
    max_rel = 0.0
    for name, p in net.param_items():
        g = grads[name]
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + eps
            lp = loss_mse(forward(net, window)[0], target)
            p[idx] = orig - eps
            lm = loss_mse(forward(net, window)[0], target)
            p[idx] = orig
            numeric = (lp - lm) / (2 * eps)
            denom = max(abs(numeric), abs(g[idx]), 1e-8)
            max_rel = max(max_rel, abs(numeric - g[idx]) / denom)
    return max_rel


class TestBackward:
    def test_zero_gradient_at_perfect_prediction(self):
        net = FusionNetwork.initialize(3, 2, 1, 4, seed=3)
        w = np.random.default_rng(5).normal(size=(4, 5))
        pred, cache = forward(net, w)
        grads = backward(net, pred, cache)
        for g in grads.values():
            np.testing.assert_allclose(g, 0.0, atol=1e-14)

    def test_finite_difference_small_net(self):
        rng = np.random.default_rng(6)
        net = FusionNetwork.initialize(3, 2, 1, 4, activation="tanh", seed=6)
        w = rng.normal(size=(4, 5))
        assert finite_difference_check(net, w, 0.3) < 1e-4

    def test_finite_difference_batched(self):
        rng = np.random.default_rng(7)
        net = FusionNetwork.initialize(2, 2, 1, 4, activation="tanh", seed=7)
        windows = rng.normal(size=(3, 4, 5))
        targets = rng.normal(size=3)
        _, cache = forward(net, windows)
        grads = backward(net, targets, cache)
        eps = 1e-5
        for name, p in net.param_items():
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = p[idx]
                p[idx] = orig + eps
                lp = loss_mse(forward(net, windows)[0], targets)
                p[idx] = orig - eps
                lm = loss_mse(forward(net, windows)[0], targets)
                p[idx] = orig
                numeric = (lp - lm) / (2 * eps)
                denom = max(abs(numeric), abs(grads[name][idx]), 1e-8)
                assert abs(numeric - grads[name][idx]) / denom < 1e-4


class TestAdam:
    def test_zero_gradient_fixed_point(self):
        opt = AdamOptimizer(lr=0.1)
        p = np.array([1.0, -2.0])
        params = [("p", p)]
        opt.step(params, {"p": np.zeros(2)})
        np.testing.assert_array_equal(p, [1.0, -2.0])
        assert opt.t == 1

    def test_first_step_magnitude(self):
        # after bias correction the first update is ~lr * sign(g)
        opt = AdamOptimizer(lr=1e-3)
        p = np.array([0.5, 0.5])
        g = np.array([3.0, -0.02])
        opt.step([("p", p)], {"p": g.copy()})
        delta = p - 0.5
        np.testing.assert_allclose(np.abs(delta), 1e-3, rtol=1e-4)
        assert np.all(np.sign(delta) == -np.sign(g))

    def test_determinism(self):
        def run():
            opt = AdamOptimizer(lr=0.01)
            p = np.array([1.0])
            for i in range(5):
                opt.step([("p", p)], {"p": np.array([float(i) - 2.0])})
            return p[0]

        assert run() == run()


def toy_dataset(n_windows=4, L=5, seed=0):
    rng = np.random.default_rng(seed)
    inputs = rng.uniform(0, 1, size=(n_windows, L, 5))
    targets = rng.uniform(0, 1, size=n_windows)
    return WindowedDataset(inputs, targets, L, 1)


class TestTrain:
    def test_memorizes_toy_dataset(self):
        ds = toy_dataset()
        net = FusionNetwork.initialize(8, 4, 1, 5, seed=0)
        history = train(net, ds, TrainConfig(epochs=500, lr=1e-2, batch_size=4, seed=0))
        assert history[-1] < 1e-3

    def test_history_is_deterministic(self):
        ds = toy_dataset(seed=1)
        h1 = train(FusionNetwork.initialize(4, 2, 1, 5, seed=1), ds,
                   TrainConfig(epochs=20, lr=1e-2, batch_size=2, seed=5))
        h2 = train(FusionNetwork.initialize(4, 2, 1, 5, seed=1), ds,
                   TrainConfig(epochs=20, lr=1e-2, batch_size=2, seed=5))
        assert h1 == h2
        assert len(h1) == 20

    def test_sine_convergence(self):
        t = np.arange(200)
        wave = 0.5 + 0.4 * np.sin(t / 8.0)
        feats = np.tile(wave[:, None], (1, 5))
        L = 10
        inputs = np.stack([feats[i : i + L] for i in range(189)])
        targets = wave[L : L + 189]
        ds = WindowedDataset(inputs, targets, L, 1)
        net = FusionNetwork.initialize(8, 4, 1, L, seed=0)
        history = train(net, ds, TrainConfig(epochs=100, lr=3e-3, batch_size=32, seed=0))
        assert history[-1] < 0.1 * history[0]

    def test_empty_dataset_rejected(self):
        ds = WindowedDataset(np.zeros((0, 5, 5)), np.zeros(0), 5, 1)
        net = FusionNetwork.initialize(2, 2, 1, 5, seed=0)
        with pytest.raises(ValueError, match="empty"):
            train(net, ds, TrainConfig(epochs=1))

    def test_divergence_aborts(self):
        ds = toy_dataset()
        net = FusionNetwork.initialize(4, 2, 1, 5, seed=0)
        with np.errstate(over="ignore"), pytest.raises(TrainingDivergedError):
            train(net, ds, TrainConfig(epochs=50, lr=1e160, batch_size=4, seed=0))


class TestPredictSeries:
    def test_empty(self):
        net = FusionNetwork.initialize(2, 2, 1, 5, seed=0)
        assert predict_series(net, np.zeros((0, 5, 5))).shape == (0,)

    def test_single_window_equals_forward(self):
        net = FusionNetwork.initialize(3, 2, 1, 5, seed=4)
        w = np.random.default_rng(8).normal(size=(5, 5))
        assert predict_series(net, w[None])[0] == forward(net, w)[0]

    def test_finite_outputs(self):
        net = FusionNetwork.initialize(3, 2, 1, 5, seed=4)
        ws = np.random.default_rng(9).normal(size=(10, 5, 5))
        assert np.isfinite(predict_series(net, ws)).all()
