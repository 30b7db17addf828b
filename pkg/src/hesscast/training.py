"""Plain SGD with the three generalization controls and gradient-noise stats.

The trainer exposes exactly the handles studied in the experiments: learning
rate, batch size and iteration count, plus optional L2 gradient
normalization.  No momentum, weight decay or schedules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .derivatives import LOSS_KINDS, _as_batch, _batch_loss_raw, _grad_weights_raw
from .network import Network, flatten_weights, replace_weights

__all__ = [
    "GradNoise",
    "TrainConfig",
    "TrainRecord",
    "TrainTrace",
    "TrainingDivergedError",
    "grad_noise_trace",
    "sgd_train",
]

GRAD_NORM_FLOOR = 1e-12
DIVERGENCE_FACTOR = 1e6
CONVERGENCE_WINDOW = 100


class TrainingDivergedError(RuntimeError):
    """Raised when the train loss blows up or becomes non-finite."""

    def __init__(self, iteration: int, loss: float, initial_loss: float):
        self.iteration = iteration
        self.loss = loss
        super().__init__(
            f"training diverged at iteration {iteration}: loss {loss:.6g} "
            f"(initial {initial_loss:.6g})"
        )


@dataclass(frozen=True)
class TrainConfig:
    """SGD hyperparameters; ``batch_size`` is an int or the string "full"."""

    learning_rate: float
    iterations: int
    batch_size: int | str = "full"
    loss: str = "mse"
    normalize_gradient: bool = False
    seed: int = 0
    snapshot_every: int | None = None
    convergence_delta: float | None = None
    sample_with_replacement: bool = False

    def validate(self, n_train: int) -> int:
        """Check fields against a training-set size; returns the batch size."""
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.iterations < 1:
            raise ValueError(f"iteration count must be >= 1, got {self.iterations}")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind '{self.loss}', expected one of {LOSS_KINDS}")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise ValueError("snapshot_every must be a positive integer")
        if self.convergence_delta is not None and not self.convergence_delta > 0:
            raise ValueError("convergence_delta must be > 0")
        if self.batch_size == "full":
            return n_train
        m = self.batch_size
        if not isinstance(m, (int, np.integer)) or isinstance(m, bool):
            raise ValueError(f"batch_size must be a positive integer or 'full', got {m!r}")
        if not 1 <= m <= n_train:
            raise ValueError(f"batch_size {m} outside [1, {n_train}]")
        return int(m)


@dataclass(frozen=True)
class TrainRecord:
    iteration: int
    train_loss: float
    snapshot: dict | None = None


@dataclass(frozen=True)
class TrainTrace:
    """Loss checkpoints, the trained network, and how the run ended."""

    records: tuple[TrainRecord, ...]
    network: Network
    converged: bool
    iterations_run: int

    @property
    def final_train_loss(self) -> float:
        return self.records[-1].train_loss


def _batch_indices(rng, n: int, m: int, iterations: int, with_replacement: bool):
    """Yield one index batch per iteration.

    Without replacement: consecutive chunks of a reshuffled permutation, so
    each index appears exactly once per epoch whenever m divides n.  A
    partial leftover chunk is discarded at the epoch boundary.  Full batches
    (m == n) draw nothing from the generator.
    """
    if m == n and not with_replacement:
        full = np.arange(n)
        for _ in range(iterations):
            yield full
        return
    perm = None
    pos = n
    for _ in range(iterations):
        if with_replacement:
            yield rng.integers(0, n, size=m)
            continue
        if pos + m > n:
            perm = rng.permutation(n)
            pos = 0
        yield perm[pos : pos + m]
        pos += m


def sgd_train(network: Network, inputs, targets, config: TrainConfig, snapshot_hook=None) -> TrainTrace:
    """Run SGD from ``network`` over the given training pairs.

    Each iteration draws a batch, computes the batch-mean gradient,
    optionally rescales it to unit L2 norm, and steps.  Records carry the
    full-training-set loss at iteration 0, every ``snapshot_every``
    iterations, and at the end; ``snapshot_hook(iteration, network)`` may
    attach extra metrics to those records.  With ``convergence_delta`` set
    the run stops once the train loss moved less than delta over the last
    100 iterations (the per-step criterion is too noisy under SGD).

    Deterministic per (initial network, config); raises
    ``TrainingDivergedError`` when the loss becomes non-finite or exceeds
    1e6 times its initial value.
    """
    X, y = _as_batch(inputs, targets, network.architecture.input_width)
    n_train = y.size
    m = config.validate(n_train)
    activation = network.architecture.activation
    rng = np.random.default_rng(config.seed)

    work = [W.copy() for W in network.weights]
    eta = config.learning_rate

    def full_loss():
        return _batch_loss_raw(work, activation, X, y, config.loss)

    def make_record(iteration, loss):
        snap = None
        if snapshot_hook is not None:
            snap = snapshot_hook(iteration, replace_weights(network, [W.copy() for W in work]))
        return TrainRecord(iteration=iteration, train_loss=loss, snapshot=snap)

    initial_loss = full_loss()
    records = [make_record(0, initial_loss)]
    limit = DIVERGENCE_FACTOR * max(initial_loss, 1e-12)

    track_convergence = config.convergence_delta is not None
    loss_window: list[float] = [initial_loss] if track_convergence else []
    converged = False
    iterations_run = 0

    batches = _batch_indices(rng, n_train, m, config.iterations, config.sample_with_replacement)
    for t, idx in enumerate(batches, start=1):
        grads, batch_loss_value = _grad_weights_raw(
            work, activation, X[idx], y[idx], config.loss
        )
        if not np.isfinite(batch_loss_value) or batch_loss_value > limit:
            raise TrainingDivergedError(t, batch_loss_value, initial_loss)
        if config.normalize_gradient:
            gnorm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
            if gnorm >= GRAD_NORM_FLOOR:
                grads = [g / gnorm for g in grads]
        for W, g in zip(work, grads):
            W -= eta * g
        iterations_run = t

        at_snapshot = config.snapshot_every is not None and t % config.snapshot_every == 0
        current = None
        if track_convergence or at_snapshot or t == config.iterations:
            current = full_loss()
            if not np.isfinite(current) or current > limit:
                raise TrainingDivergedError(t, current, initial_loss)
        if track_convergence:
            loss_window.append(current)
            if len(loss_window) > CONVERGENCE_WINDOW:
                if abs(current - loss_window[-CONVERGENCE_WINDOW - 1]) < config.convergence_delta:
                    converged = True
                loss_window.pop(0)
        if t == config.iterations or converged:
            records.append(make_record(t, current))
            break
        if at_snapshot:
            records.append(make_record(t, current))

    final = replace_weights(network, work)
    return TrainTrace(
        records=tuple(records),
        network=final,
        converged=converged,
        iterations_run=iterations_run,
    )


@dataclass(frozen=True)
class GradNoise:
    """Trace of the per-sample gradient covariance K and its batch scaling."""

    trace_k: float
    batch_size: int
    per_batch: float  # trace_k / batch_size, the N(0, K/M) noise variance scale
    n_samples: int = 0


def grad_noise_trace(network: Network, inputs, targets, kind: str, batch_size: int) -> GradNoise:
    """Tr(K) with K the covariance of per-sample gradients around their mean.

    Tr(K) = (1/(N-1)) * sum_i ||g_i - g||^2 over the N training samples.
    """
    X, y = _as_batch(inputs, targets, network.architecture.input_width)
    n = y.size
    if n < 2:
        raise ValueError(f"need at least 2 training samples, got {n}")
    if not 1 <= batch_size <= n:
        raise ValueError(f"batch_size {batch_size} outside [1, {n}]")
    activation = network.architecture.activation
    per_sample = np.empty((n, network.param_count))
    for i in range(n):
        grads, _ = _grad_weights_raw(network.weights, activation, X[i : i + 1], y[i : i + 1], kind)
        per_sample[i] = flatten_weights(grads)
    mean = per_sample.mean(axis=0)
    trace_k = float(np.sum((per_sample - mean) ** 2) / (n - 1))
    return GradNoise(trace_k=trace_k, batch_size=batch_size, per_batch=trace_k / batch_size, n_samples=n)
