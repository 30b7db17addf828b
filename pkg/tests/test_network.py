"""Network construction, forward evaluation, scaling symmetry, vectorization."""

import numpy as np
import pytest

from hesscast import (
    Architecture,
    Network,
    alpha_scale,
    flatten_weights,
    forward,
    forward_batch,
    init_network,
    load_network,
    save_network,
    unflatten_weights,
)
from oracles import loop_forward


class TestInit:
    def test_hidden_width_sets_variance(self):
        # Width-100 hidden layers: every matrix is initialized at variance 0.01.
        arch = Architecture(50, (100, 100), "tanh")
        net = init_network(arch, seed=0)
        for W in net.weights:
            assert abs(float(np.var(W)) - 0.01) < 0.2 * 0.01

    def test_deterministic_per_seed(self):
        arch = Architecture(4, (7,), "relu")
        a = init_network(arch, seed=42)
        b = init_network(arch, seed=42)
        for Wa, Wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(Wa, Wb)

    def test_seeds_differ(self):
        arch = Architecture(4, (7,), "relu")
        a = init_network(arch, seed=1)
        b = init_network(arch, seed=2)
        assert any(np.any(Wa != Wb) for Wa, Wb in zip(a.weights, b.weights))


class TestForward:
    def test_zero_weights_give_zero(self):
        arch = Architecture(3, (4, 4), "tanh")
        net = Network(arch, tuple(np.zeros(s) for s in arch.weight_shapes()))
        assert forward(net, [1.0, -2.0, 3.0]) == 0.0

    def test_single_linear_layer_is_dot_product(self):
        w = np.array([[2.0, -1.0, 0.5]])
        net = Network(Architecture(3, (), "linear"), (w,))
        x = np.array([1.0, 2.0, 4.0])
        assert forward(net, x) == pytest.approx(float((w @ x)[0]), abs=0)

    def test_matches_independent_recurrence(self):
        rng = np.random.default_rng(17)
        for act in ("tanh", "relu", "linear"):
            arch = Architecture(4, (5, 3), act)
            net = init_network(arch, seed=3)
            for _ in range(5):
                x = rng.standard_normal(4)
                assert forward(net, x) == pytest.approx(loop_forward(net, x), rel=1e-12)

    def test_tanh_is_not_homogeneous(self):
        net = init_network(Architecture(3, (6,), "tanh"), seed=1)
        x = np.array([0.4, -0.3, 0.8])
        assert abs(forward(net, 2 * x) - 2 * forward(net, x)) > 1e-6

    def test_batch_matches_single(self):
        net = init_network(Architecture(5, (8,), "tanh"), seed=2)
        X = np.random.default_rng(0).standard_normal((7, 5))
        out = forward_batch(net, X)
        for i in range(7):
            assert out[i] == pytest.approx(forward(net, X[i]), rel=1e-14)

    def test_shape_mismatch_rejected(self):
        net = init_network(Architecture(3, (4,), "tanh"), seed=0)
        with pytest.raises(ValueError):
            forward(net, [1.0, 2.0])


class TestAlphaScale:
    def test_alpha_one_is_identity(self):
        net = init_network(Architecture(3, (5,), "relu"), seed=4)
        scaled = alpha_scale(net, 1.0)
        for Wa, Wb in zip(net.weights, scaled.weights):
            np.testing.assert_array_equal(Wa, Wb)

    def test_relu_outputs_unchanged(self):
        net = init_network(Architecture(4, (6,), "relu"), seed=5)
        scaled = alpha_scale(net, 2.0)
        rng = np.random.default_rng(6)
        for _ in range(100):
            x = rng.standard_normal(4)
            assert abs(forward(net, x) - forward(scaled, x)) < 1e-10

    def test_original_untouched(self):
        net = init_network(Architecture(3, (4,), "relu"), seed=7)
        before = [W.copy() for W in net.weights]
        alpha_scale(net, 3.0)
        for Wa, Wb in zip(net.weights, before):
            np.testing.assert_array_equal(Wa, Wb)

    def test_non_relu_rejected(self):
        net = init_network(Architecture(3, (4,), "tanh"), seed=8)
        with pytest.raises(ValueError, match="relu"):
            alpha_scale(net, 2.0)

    def test_nonpositive_alpha_rejected(self):
        net = init_network(Architecture(3, (4,), "relu"), seed=8)
        with pytest.raises(ValueError, match="alpha"):
            alpha_scale(net, 0.0)


class TestVectorization:
    def test_param_count_bookkeeping(self):
        arch = Architecture(5, (7, 3), "tanh")
        assert arch.param_count == 5 * 7 + 7 * 3 + 3 * 1
        net = init_network(arch, seed=9)
        assert flatten_weights(net.weights).size == arch.param_count

    def test_flatten_unflatten_inverse(self):
        arch = Architecture(4, (6, 2), "relu")
        net = init_network(arch, seed=10)
        vec = flatten_weights(net.weights)
        mats = unflatten_weights(arch, vec)
        for Wa, Wb in zip(net.weights, mats):
            np.testing.assert_array_equal(Wa, Wb)
        np.testing.assert_array_equal(flatten_weights(mats), vec)

    def test_weights_are_immutable(self):
        net = init_network(Architecture(3, (4,), "tanh"), seed=11)
        with pytest.raises(ValueError):
            net.weights[0][0, 0] = 5.0


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        net = init_network(Architecture(6, (9, 4), "relu"), seed=12)
        path = tmp_path / "net.json"
        save_network(net, path)
        back = load_network(path)
        assert back.architecture == net.architecture
        for Wa, Wb in zip(net.weights, back.weights):
            np.testing.assert_array_equal(Wa, Wb)


class TestArchitectureValidation:
    def test_bad_activation(self):
        with pytest.raises(ValueError, match="activation"):
            Architecture(3, (4,), "sigmoid")

    def test_bad_widths(self):
        with pytest.raises(ValueError):
            Architecture(0, (4,), "tanh")
        with pytest.raises(ValueError):
            Architecture(3, (0,), "tanh")

    def test_wrong_weight_shape_rejected(self):
        arch = Architecture(3, (4,), "tanh")
        with pytest.raises(ValueError, match="shape"):
            Network(arch, (np.zeros((4, 3)), np.zeros((2, 4))))
