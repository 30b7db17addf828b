"""Losses, curvature summaries, hit rate and input-noise robustness probes.

Curvature metrics follow the experiment conventions: input-Hessian traces
and Jacobian norms are dataset means over the training inputs, weight
Hessian traces are reported per layer and in total, and the quadratic form
w^T H^w w gives a summary that survives the ReLU layer-pair rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .derivatives import (
    DEFAULT_INPUT_HESSIAN_CAP,
    _as_batch,
    _check_loss_kind,
    _forward_cache,
    _input_hessian_diag_batch,
    _per_sample_loss,
    batch_loss,
    hvp_weights,
    input_jacobian_batch,
    weight_hessian_diag,
)
from .network import Network, flatten_weights, forward_batch

__all__ = [
    "MetricsReport",
    "ProbeResult",
    "compute_report",
    "hit_rate",
    "jitter_regularizer_check",
    "loss",
    "mean_input_hessian_trace",
    "mean_jacobian_frobenius",
    "noise_robustness_probe",
    "scaled_quadform",
]

REL_GAP_FLOOR = 1e-12


def loss(network: Network, X, y, kind: str = "mse") -> float:
    """Mean pointwise loss over a dataset slice."""
    return batch_loss(network, X, y, kind)


def mean_input_hessian_trace(
    network: Network, X, y, kind: str = "mse", cap: int = DEFAULT_INPUT_HESSIAN_CAP
) -> float:
    """Dataset mean of the per-sample input-Hessian trace."""
    diag = _input_hessian_diag_batch(network, X, y, kind, cap=cap)
    return float(np.mean(diag.sum(axis=1)))


def mean_jacobian_frobenius(network: Network, X) -> float:
    """Dataset mean of the Frobenius (Euclidean) norm of the input Jacobian."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("slice must be non-empty")
    J = input_jacobian_batch(network, X)
    return float(np.mean(np.linalg.norm(J, axis=1)))


def scaled_quadform(network: Network, X, y, kind: str = "mse") -> float:
    """w^T H^w w along the vectorized weights, via a single HVP."""
    w = flatten_weights(network.weights)
    if not np.any(w):
        return 0.0
    return float(w @ hvp_weights(network, X, y, kind, w))


def hit_rate(network: Network, X, y) -> float:
    """Fraction of samples whose predicted sign matches the target sign.

    sign(0) counts as +1 on both sides.
    """
    X, y = _as_batch(X, y, network.architecture.input_width)
    pred = forward_batch(network, X)
    up_pred = pred >= 0.0
    up_true = y >= 0.0
    return float(np.mean(up_pred == up_true))


# ── Input-noise robustness probes ────────────────────────────────────────────


@dataclass(frozen=True)
class ProbeResult:
    """Monte-Carlo loss shift under input noise vs. its trace prediction."""

    delta_hat: float
    trace_prediction: float
    relative_gap: float
    noise_scale: float
    draws: int


def _perturbation_probe(network, X, y, kind, scale, draws, seed) -> ProbeResult:
    _check_loss_kind(kind)
    X, y = _as_batch(X, y, network.architecture.input_width)
    if not scale > 0:
        raise ValueError(f"noise scale must be > 0, got {scale}")
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    rng = np.random.default_rng(seed)
    weights, activation = network.weights, network.architecture.activation
    n, n0 = X.shape
    _, _, out0 = _forward_cache(weights, activation, X)
    base = _per_sample_loss(out0, y, kind)

    def mean_shift(Xp, yp, base_rep):
        _, _, out = _forward_cache(weights, activation, Xp)
        return float(np.mean(_per_sample_loss(out, yp, kind) - base_rep))

    # Antithetic pairs (eps, -eps): the first-order term cancels within each
    # pair, so the estimator converges at the curvature scale.
    total = 0.0
    done = 0
    chunk_pairs = max(1, 20000 // max(n, 1))
    while done < draws:
        pairs = min(chunk_pairs, (draws - done) // 2)
        if pairs >= 1:
            eps = rng.standard_normal((pairs, n, n0))
            Xp = (X[None, :, :] + scale * eps).reshape(pairs * n, n0)
            Xm = (X[None, :, :] - scale * eps).reshape(pairs * n, n0)
            y_rep = np.tile(y, pairs)
            base_rep = np.tile(base, pairs)
            total += pairs * mean_shift(Xp, y_rep, base_rep)
            total += pairs * mean_shift(Xm, y_rep, base_rep)
            done += 2 * pairs
        else:
            eps = rng.standard_normal((n, n0))
            total += mean_shift(X + scale * eps, y, base)
            done += 1
    delta_hat = total / draws

    prediction = 0.5 * scale * scale * mean_input_hessian_trace(network, X, y, kind)
    gap = abs(delta_hat - prediction) / max(abs(prediction), REL_GAP_FLOOR)
    return ProbeResult(
        delta_hat=delta_hat,
        trace_prediction=prediction,
        relative_gap=gap,
        noise_scale=float(scale),
        draws=int(draws),
    )


def noise_robustness_probe(
    network: Network, X, y, kind: str, alpha: float, draws: int, seed: int = 0
) -> ProbeResult:
    """Check E[L(x + alpha*eps) - L(x)] against (alpha^2/2) Tr(H^x).

    eps is i.i.d. standard normal per coordinate; relative_gap compares the
    Monte-Carlo mean against the second-order trace prediction.
    """
    return _perturbation_probe(network, X, y, kind, alpha, draws, seed)


def jitter_regularizer_check(
    network: Network, X, y, kind: str, sigma: float, draws: int, seed: int = 0
) -> ProbeResult:
    """Same quadratic identity with sigma playing the SGD-jitter role."""
    return _perturbation_probe(network, X, y, kind, sigma, draws, seed)


# ── Per-run report ───────────────────────────────────────────────────────────


@dataclass(frozen=True)
class MetricsReport:
    """All per-run metrics; gap is stored as exactly test - train."""

    train_loss: float
    test_loss: float
    gap: float
    tr_input_hessian: float
    jacobian_frobenius: float
    tr_weight_hessian_total: float
    tr_weight_hessian_per_layer: tuple[float, ...]
    scaled_quadform: float
    hit_rate: float | None
    seed: int
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        values = [
            self.train_loss,
            self.test_loss,
            self.gap,
            self.tr_input_hessian,
            self.jacobian_frobenius,
            self.tr_weight_hessian_total,
            self.scaled_quadform,
            *self.tr_weight_hessian_per_layer,
        ]
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"metrics report contains non-finite values: {values}")
        if self.gap != self.test_loss - self.train_loss:
            raise ValueError("gap must equal test_loss - train_loss exactly")
        if self.hit_rate is not None and not 0.0 <= self.hit_rate <= 1.0:
            raise ValueError(f"hit rate {self.hit_rate} outside [0, 1]")

    def as_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "test_loss": self.test_loss,
            "gap": self.gap,
            "tr_input_hessian": self.tr_input_hessian,
            "jacobian_frobenius": self.jacobian_frobenius,
            "tr_weight_hessian_total": self.tr_weight_hessian_total,
            "tr_weight_hessian_per_layer": list(self.tr_weight_hessian_per_layer),
            "scaled_quadform": self.scaled_quadform,
            "hit_rate": self.hit_rate,
            "seed": self.seed,
            "config": dict(self.config),
        }


def compute_report(
    network: Network,
    dataset,
    kind: str = "mse",
    seed: int = 0,
    config: dict | None = None,
    with_hit_rate: bool = True,
    input_cap: int = DEFAULT_INPUT_HESSIAN_CAP,
) -> MetricsReport:
    """Full metric record for a trained network on a windowed dataset.

    Curvature means run over the training inputs (the experiment
    convention); the hit rate is evaluated on the test slice.
    """
    train_x, train_y = dataset.train_inputs, dataset.train_targets
    test_x, test_y = dataset.test_inputs, dataset.test_targets
    train_loss = loss(network, train_x, train_y, kind)
    test_loss = loss(network, test_x, test_y, kind)
    diag = weight_hessian_diag(network, train_x, train_y, kind)
    return MetricsReport(
        train_loss=train_loss,
        test_loss=test_loss,
        gap=test_loss - train_loss,
        tr_input_hessian=mean_input_hessian_trace(network, train_x, train_y, kind, cap=input_cap),
        jacobian_frobenius=mean_jacobian_frobenius(network, train_x),
        tr_weight_hessian_total=diag.total_trace,
        tr_weight_hessian_per_layer=tuple(float(t) for t in diag.layer_traces),
        scaled_quadform=scaled_quadform(network, train_x, train_y, kind),
        hit_rate=hit_rate(network, test_x, test_y) if with_hit_rate else None,
        seed=seed,
        config=dict(config or {}),
    )
