"""Metric layer: losses, curvature summaries, hit rate, noise probes."""

import numpy as np
import pytest

from hesscast import (
    Architecture,
    MetricsReport,
    Network,
    alpha_scale,
    compute_report,
    gen_noisy_sine,
    hit_rate,
    init_network,
    jitter_regularizer_check,
    loss,
    mean_input_hessian_trace,
    mean_jacobian_frobenius,
    noise_robustness_probe,
    scaled_quadform,
    window,
)
from hesscast.estimator import MLPForecaster
from oracles import second_difference_input_hessian


def linear_model(w):
    w = np.asarray(w, dtype=np.float64)
    return Network(Architecture(w.size, (), "linear"), (w[None, :],))


def zero_net(n0=3, widths=(4,), activation="tanh"):
    arch = Architecture(n0, widths, activation)
    return Network(arch, tuple(np.zeros(s) for s in arch.weight_shapes()))


class TestLoss:
    def test_perfect_predictor_is_zero(self):
        w = np.array([1.0, 2.0])
        net = linear_model(w)
        X = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 3.0]])
        assert loss(net, X, X @ w, "mse") == 0.0

    def test_constant_zero_predictor(self):
        net = zero_net()
        X = np.zeros((4, 3))
        y = np.full(4, 2.0)
        assert loss(net, X, y, "mse") == pytest.approx(4.0)
        assert loss(net, X, y, "mae") == pytest.approx(2.0)

    def test_empty_slice_rejected(self):
        with pytest.raises(ValueError):
            loss(zero_net(), np.empty((0, 3)), np.empty(0), "mse")


class TestInputHessianTrace:
    def test_linear_model_closed_form(self):
        w = np.array([1.0, -2.0, 0.5])
        net = linear_model(w)
        rng = np.random.default_rng(0)
        for n in (1, 7):
            X = rng.standard_normal((n, 3))
            y = rng.standard_normal(n)
            got = mean_input_hessian_trace(net, X, y, "mse")
            assert got == pytest.approx(2.0 * float(w @ w), rel=1e-7)

    def test_zero_network(self):
        net = zero_net()
        assert mean_input_hessian_trace(net, np.ones((3, 3)), np.ones(3), "mse") == pytest.approx(
            0.0, abs=1e-9
        )

    def test_matches_brute_second_differences(self):
        net = init_network(Architecture(3, (5,), "tanh"), seed=1)
        rng = np.random.default_rng(2)
        X = rng.standard_normal((4, 3))
        y = rng.standard_normal(4)
        oracle = np.mean(
            [np.trace(second_difference_input_hessian(net, X[i], y[i], "mse")) for i in range(4)]
        )
        got = mean_input_hessian_trace(net, X, y, "mse")
        assert abs(got - oracle) < 1e-3 * max(abs(oracle), 1e-3)


class TestJacobianFrobenius:
    def test_linear_model_is_weight_norm(self):
        w = np.array([3.0, 4.0])
        net = linear_model(w)
        X = np.random.default_rng(3).standard_normal((6, 2))
        assert mean_jacobian_frobenius(net, X) == pytest.approx(5.0, rel=1e-12)

    def test_zero_network(self):
        assert mean_jacobian_frobenius(zero_net(), np.ones((2, 3))) == 0.0

    def test_doubling_linear_head_doubles_value(self):
        net = init_network(Architecture(3, (6,), "tanh"), seed=4)
        doubled = Network(net.architecture, (net.weights[0], 2.0 * net.weights[1]))
        X = np.random.default_rng(5).standard_normal((5, 3))
        assert mean_jacobian_frobenius(doubled, X) == pytest.approx(
            2.0 * mean_jacobian_frobenius(net, X), rel=1e-12
        )


class TestScaledQuadform:
    def test_zero_network_is_zero(self):
        assert scaled_quadform(zero_net(), np.ones((2, 3)), np.ones(2), "mse") == 0.0

    def test_invariant_under_relu_rescaling(self):
        net = init_network(Architecture(4, (6,), "relu"), seed=6)
        rng = np.random.default_rng(7)
        X = rng.standard_normal((8, 4))
        y = rng.standard_normal(8)
        base = scaled_quadform(net, X, y, "mse")
        for alpha in (0.5, 2.0):
            twin = scaled_quadform(alpha_scale(net, alpha), X, y, "mse")
            assert abs(twin - base) / max(abs(base), 1e-12) < 1e-2

    def test_linear_model_single_sample(self):
        w = np.array([0.8, -0.6])
        net = linear_model(w)
        x = np.array([[1.5, 2.0]])
        got = scaled_quadform(net, x, [0.0], "mse")
        assert got == pytest.approx(2.0 * float(w @ x[0]) ** 2, rel=1e-6)


class TestHitRate:
    def test_perfect_and_inverted(self):
        w = np.array([1.0])
        net = linear_model(w)  # predicts x itself
        X = np.array([[1.0], [-2.0], [3.5], [-0.1]])
        assert hit_rate(net, X, X[:, 0]) == 1.0
        assert hit_rate(net, X, -X[:, 0]) == 0.0

    def test_sign_zero_counts_positive(self):
        net = zero_net(n0=2, widths=(3,))
        X = np.ones((4, 2))
        assert hit_rate(net, X, np.array([1.0, 2.0, -1.0, 3.0])) == 0.75

    def test_random_signs_near_half(self):
        # Bernoulli oracle: constant positive predictor scores P(y >= 0).
        arch = Architecture(1, (2,), "relu")
        net = Network(arch, (np.array([[1.0], [-1.0]]), np.array([[1.0, 1.0]])))  # |x| >= 0
        rng = np.random.default_rng(8)
        X = rng.standard_normal((10_000, 1))
        y = rng.choice([-1.0, 1.0], 10_000)
        rate = hit_rate(net, X, y)
        assert rate == pytest.approx(float(np.mean(y >= 0)), abs=1e-12)
        assert abs(rate - 0.5) < 0.02


class TestNoiseProbe:
    def test_linear_model_quadratic_expectation(self):
        rng = np.random.default_rng(9)
        w = rng.standard_normal(6)
        net = linear_model(w)
        X = rng.standard_normal((10, 6))
        y = rng.standard_normal(10)
        res = noise_robustness_probe(net, X, y, "mse", alpha=0.5, draws=10_000, seed=0)
        # E[L(x + a*eps) - L(x)] = a^2 ||w||^2 exactly for the quadratic loss.
        assert res.trace_prediction == pytest.approx(0.25 * float(w @ w), rel=1e-6)
        assert res.relative_gap < 0.05

    def test_alpha_zero_rejected(self):
        net = linear_model(np.ones(2))
        with pytest.raises(ValueError, match="scale"):
            noise_robustness_probe(net, np.ones((2, 2)), np.ones(2), "mse", alpha=0.0, draws=10)

    def test_trained_net_quadratic_regime(self):
        s = gen_noisy_sine(101, c=0.1, seed=0)
        ds = window(s, n=5, split=0.7, normalize=True)
        model = MLPForecaster(hidden_widths=(30,), iterations=2000, random_state=0)
        model.fit(ds.train_inputs, ds.train_targets)
        alpha = 0.01 * float(np.std(ds.train_inputs))
        res = noise_robustness_probe(
            model.network_, ds.train_inputs, ds.train_targets, "mse", alpha=alpha, draws=2000, seed=1
        )
        # Oracle: the probe's own Monte-Carlo at 10x the draws.
        oracle = noise_robustness_probe(
            model.network_, ds.train_inputs, ds.train_targets, "mse", alpha=alpha, draws=20_000, seed=2
        )
        assert res.relative_gap < 0.2
        assert abs(res.delta_hat - oracle.delta_hat) / max(abs(oracle.delta_hat), 1e-12) < 0.2

    def test_jitter_check_mirrors_probe(self):
        rng = np.random.default_rng(10)
        w = rng.standard_normal(4)
        net = linear_model(w)
        X = rng.standard_normal((6, 4))
        y = rng.standard_normal(6)
        a = noise_robustness_probe(net, X, y, "mse", alpha=0.3, draws=4000, seed=5)
        b = jitter_regularizer_check(net, X, y, "mse", sigma=0.3, draws=4000, seed=5)
        assert a == b  # same machinery, sigma in the alpha role
        assert b.relative_gap < 0.05


class TestMetricsReport:
    def test_gap_is_exact(self):
        s = gen_noisy_sine(60, c=0.1, seed=3)
        ds = window(s, n=4, split=0.7, normalize=True)
        model = MLPForecaster(hidden_widths=(10,), iterations=200, random_state=1)
        model.fit(ds.train_inputs, ds.train_targets)
        rep = compute_report(model.network_, ds, seed=1)
        assert rep.gap == rep.test_loss - rep.train_loss
        assert rep.hit_rate is not None and 0.0 <= rep.hit_rate <= 1.0
        assert len(rep.tr_weight_hessian_per_layer) == 2
        assert rep.tr_weight_hessian_total == pytest.approx(
            sum(rep.tr_weight_hessian_per_layer), rel=1e-12
        )

    def test_non_finite_fields_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            MetricsReport(
                train_loss=float("nan"),
                test_loss=0.0,
                gap=-float("nan"),
                tr_input_hessian=0.0,
                jacobian_frobenius=0.0,
                tr_weight_hessian_total=0.0,
                tr_weight_hessian_per_layer=(0.0,),
                scaled_quadform=0.0,
                hit_rate=None,
                seed=0,
            )

    def test_gap_mismatch_rejected(self):
        with pytest.raises(ValueError, match="gap"):
            MetricsReport(
                train_loss=1.0,
                test_loss=2.0,
                gap=0.5,
                tr_input_hessian=0.0,
                jacobian_frobenius=0.0,
                tr_weight_hessian_total=0.0,
                tr_weight_hessian_per_layer=(0.0,),
                scaled_quadform=0.0,
                hit_rate=None,
                seed=0,
            )

    def test_as_dict_round_trip_fields(self):
        rep = MetricsReport(
            train_loss=1.0,
            test_loss=1.5,
            gap=0.5,
            tr_input_hessian=0.1,
            jacobian_frobenius=0.2,
            tr_weight_hessian_total=0.3,
            tr_weight_hessian_per_layer=(0.1, 0.2),
            scaled_quadform=0.4,
            hit_rate=0.6,
            seed=3,
            config={"eta": 0.05},
        )
        doc = rep.as_dict()
        assert doc["gap"] == 0.5
        assert doc["tr_weight_hessian_per_layer"] == [0.1, 0.2]
        assert doc["config"] == {"eta": 0.05}
