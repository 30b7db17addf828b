"""Scikit-learn estimator facade over the SGD-trained dense forecaster.

``MLPForecaster`` follows the fit/predict/get_params contract so the model
composes with pipelines, grid search and cloning; the curvature metrics
operate on its fitted ``network_``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .network import Architecture, forward_batch, init_network
from .training import TrainConfig, sgd_train

__all__ = ["MLPForecaster"]


class MLPForecaster(RegressorMixin, BaseEstimator):
    """One-step-ahead dense forecaster trained by plain SGD.

    Parameters mirror the training controls under study: learning rate,
    batch size (int or "full") and iteration count, plus optional L2
    gradient normalization.  ``random_state`` seeds both the N(0, 1/fan_in)
    weight initialization and the batch sampler, making fits bit
    reproducible.

    Attributes after fit: ``network_`` (immutable trained network),
    ``trace_`` (loss checkpoints), ``n_features_in_``.
    """

    def __init__(
        self,
        hidden_widths=(100,),
        activation="tanh",
        learning_rate=0.05,
        batch_size="full",
        iterations=1000,
        loss="mse",
        normalize_gradient=False,
        random_state=0,
        snapshot_every=None,
        convergence_delta=None,
    ):
        self.hidden_widths = hidden_widths
        self.activation = activation
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.iterations = iterations
        self.loss = loss
        self.normalize_gradient = normalize_gradient
        self.random_state = random_state
        self.snapshot_every = snapshot_every
        self.convergence_delta = convergence_delta

    def fit(self, X, y, snapshot_hook=None):
        X, y = check_X_y(X, y, y_numeric=True)
        architecture = Architecture(
            input_width=X.shape[1],
            hidden_widths=tuple(self.hidden_widths),
            activation=self.activation,
        )
        config = TrainConfig(
            learning_rate=self.learning_rate,
            iterations=self.iterations,
            batch_size=self.batch_size,
            loss=self.loss,
            normalize_gradient=self.normalize_gradient,
            seed=self.random_state,
            snapshot_every=self.snapshot_every,
            convergence_delta=self.convergence_delta,
        )
        initial = init_network(architecture, self.random_state)
        trace = sgd_train(initial, X, y, config, snapshot_hook=snapshot_hook)
        self.network_ = trace.network
        self.trace_ = trace
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "network_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the model was fit with {self.n_features_in_}"
            )
        return np.asarray(forward_batch(self.network_, X))
