"""First and second derivatives of the forecaster and its loss.

Gradients (weights and inputs) are exact reverse-mode derivatives.  Second
derivatives are finite differences built on top of them: Hessian-vector
products and full weight Hessians difference the analytic gradient, while
weight-Hessian diagonals use second differences of the loss itself.  The
eigen solver is a cyclic Jacobi rotation scheme for symmetric matrices.

Conventions: weight vectors are layer-major, row-major within a layer (see
``network.flatten_weights``); batch losses are means over samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import ACTIVATIONS, Network, flatten_weights, unflatten_weights

__all__ = [
    "DEFAULT_INPUT_HESSIAN_CAP",
    "DEFAULT_WEIGHT_HESSIAN_CAP",
    "LOSS_KINDS",
    "SpectrumReport",
    "WeightHessianDiag",
    "batch_loss",
    "full_weight_hessian",
    "grad_input",
    "grad_input_batch",
    "grad_weights",
    "hvp_weights",
    "input_hessian",
    "input_jacobian",
    "input_jacobian_batch",
    "spectrum",
    "weight_hessian_diag",
]

LOSS_KINDS = ("mse", "mae")

# Step scale for finite differences over exact values: cbrt(machine eps).
CBRT_EPS = float(np.cbrt(np.finfo(np.float64).eps))

DEFAULT_INPUT_HESSIAN_CAP = 64
DEFAULT_WEIGHT_HESSIAN_CAP = 2000


def _check_loss_kind(kind: str) -> None:
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind '{kind}', expected one of {LOSS_KINDS}")


def _as_batch(X, y, n0: int):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if X.shape != (y.shape[0], n0):
        raise ValueError(f"batch shapes {X.shape} / {y.shape} do not match input width {n0}")
    if y.size == 0:
        raise ValueError("batch must be non-empty")
    return X, y


# ── Forward/backward core on raw weight lists (hot path) ─────────────────────


def _forward_cache(weights, activation, X):
    """Activations A[l] (n_l, N), hidden pre-activations Z[l], outputs (N,)."""
    act, _ = ACTIVATIONS[activation]
    A = [X.T]
    Z = []
    for W in weights[:-1]:
        z = W @ A[-1]
        Z.append(z)
        A.append(act(z))
    out = (weights[-1] @ A[-1]).ravel()
    return A, Z, out


def _per_sample_loss(yhat, y, kind):
    r = yhat - y
    return r * r if kind == "mse" else np.abs(r)


def _dloss_dout(yhat, y, kind):
    r = yhat - y
    return 2.0 * r if kind == "mse" else np.sign(r)


def _backward(weights, activation, A, Z, D):
    """Backpropagate output-level deltas D (1, N).

    Returns per-layer weight gradients (summed over the batch, scaled by
    whatever D carries) and the input-level deltas (n0, N).
    """
    _, dact = ACTIVATIONS[activation]
    L = len(weights)
    grads = [None] * L
    for l in range(L - 1, 0, -1):
        grads[l] = D @ A[l].T
        D = (weights[l].T @ D) * dact(Z[l - 1], A[l])
    grads[0] = D @ A[0].T
    return grads, weights[0].T @ D


def _batch_loss_raw(weights, activation, X, y, kind):
    _, _, out = _forward_cache(weights, activation, X)
    return float(np.mean(_per_sample_loss(out, y, kind)))


def _grad_weights_raw(weights, activation, X, y, kind):
    """(per-layer gradients of the batch-mean loss, batch-mean loss)."""
    A, Z, out = _forward_cache(weights, activation, X)
    n = out.size
    D = (_dloss_dout(out, y, kind) / n)[None, :]
    grads, _ = _backward(weights, activation, A, Z, D)
    return grads, float(np.mean(_per_sample_loss(out, y, kind)))


# ── Public first derivatives ─────────────────────────────────────────────────


def batch_loss(network: Network, X, y, kind: str = "mse") -> float:
    """Mean pointwise loss of the network over a batch."""
    _check_loss_kind(kind)
    X, y = _as_batch(X, y, network.architecture.input_width)
    return _batch_loss_raw(network.weights, network.architecture.activation, X, y, kind)


def grad_weights(network: Network, X, y, kind: str = "mse") -> list[np.ndarray]:
    """Exact gradient of the batch-mean loss, one matrix per layer."""
    _check_loss_kind(kind)
    X, y = _as_batch(X, y, network.architecture.input_width)
    grads, _ = _grad_weights_raw(network.weights, network.architecture.activation, X, y, kind)
    return grads


def grad_input_batch(network: Network, X, y, kind: str = "mse") -> np.ndarray:
    """Per-sample gradient of the pointwise loss w.r.t. the input, (N, n0)."""
    _check_loss_kind(kind)
    X, y = _as_batch(X, y, network.architecture.input_width)
    weights, activation = network.weights, network.architecture.activation
    A, Z, out = _forward_cache(weights, activation, X)
    D = _dloss_dout(out, y, kind)[None, :]
    _, dX = _backward(weights, activation, A, Z, D)
    return dX.T


def grad_input(network: Network, x, y: float, kind: str = "mse") -> np.ndarray:
    """Gradient of the single-sample loss w.r.t. the input vector."""
    x = np.asarray(x, dtype=np.float64)
    return grad_input_batch(network, x[None, :], [y], kind)[0]


def input_jacobian_batch(network: Network, X) -> np.ndarray:
    """Per-sample derivative of the output (not the loss) w.r.t. inputs."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n0 = network.architecture.input_width
    if X.shape[1] != n0:
        raise ValueError(f"expected inputs of width {n0}, got {X.shape[1]}")
    weights, activation = network.weights, network.architecture.activation
    A, Z, out = _forward_cache(weights, activation, X)
    D = np.ones((1, out.size))
    _, dX = _backward(weights, activation, A, Z, D)
    return dX.T


def input_jacobian(network: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return input_jacobian_batch(network, x[None, :])[0]


# ── Input Hessian ────────────────────────────────────────────────────────────


def input_hessian(
    network: Network, x, y: float, kind: str = "mse", cap: int = DEFAULT_INPUT_HESSIAN_CAP
) -> np.ndarray:
    """Hessian of the single-sample loss w.r.t. the input, symmetrized.

    Central differences of the analytic input gradient, column by column,
    then (H + H^T)/2.
    """
    _check_loss_kind(kind)
    x = np.asarray(x, dtype=np.float64)
    n0 = network.architecture.input_width
    if x.shape != (n0,):
        raise ValueError(f"expected input of width {n0}, got shape {x.shape}")
    if n0 > cap:
        raise ValueError(f"input width {n0} exceeds the input-Hessian cap {cap}")
    steps = CBRT_EPS * (1.0 + np.abs(x))
    # One batched backward pass over all 2*n0 perturbed copies.
    Xp = np.repeat(x[None, :], 2 * n0, axis=0)
    for i in range(n0):
        Xp[2 * i, i] += steps[i]
        Xp[2 * i + 1, i] -= steps[i]
    G = grad_input_batch(network, Xp, np.full(2 * n0, y), kind)
    H = np.empty((n0, n0))
    for i in range(n0):
        H[:, i] = (G[2 * i] - G[2 * i + 1]) / (2.0 * steps[i])
    return (H + H.T) / 2.0


def _input_hessian_diag_batch(network, X, y, kind, cap=DEFAULT_INPUT_HESSIAN_CAP):
    """Per-sample diagonals of the input Hessian, (N, n0).  Used for traces."""
    X, y = _as_batch(X, y, network.architecture.input_width)
    n0 = X.shape[1]
    if n0 > cap:
        raise ValueError(f"input width {n0} exceeds the input-Hessian cap {cap}")
    diag = np.empty_like(X)
    for i in range(n0):
        h = CBRT_EPS * (1.0 + np.abs(X[:, i]))
        Xp = X.copy()
        Xp[:, i] += h
        Xm = X.copy()
        Xm[:, i] -= h
        gp = grad_input_batch(network, Xp, y, kind)[:, i]
        gm = grad_input_batch(network, Xm, y, kind)[:, i]
        diag[:, i] = (gp - gm) / (2.0 * h)
    return diag


# ── Weight Hessian: HVP, diagonal, full matrix ───────────────────────────────


def hvp_weights(network: Network, X, y, kind: str, v) -> np.ndarray:
    """Weight-Hessian-vector product via central differences of the gradient.

    Step h = cbrt(eps) * (1 + ||w||) / ||v||, exact analytic gradient inside.
    """
    _check_loss_kind(kind)
    X, y = _as_batch(X, y, network.architecture.input_width)
    v = np.asarray(v, dtype=np.float64)
    w = flatten_weights(network.weights)
    if v.shape != w.shape:
        raise ValueError(f"direction has shape {v.shape}, expected {w.shape}")
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        raise ValueError("direction vector must be nonzero")
    h = CBRT_EPS * (1.0 + float(np.linalg.norm(w))) / vnorm
    arch, activation = network.architecture, network.architecture.activation

    def grad_at(wvec):
        mats = unflatten_weights(arch, wvec)
        grads, _ = _grad_weights_raw(mats, activation, X, y, kind)
        return flatten_weights(grads)

    return (grad_at(w + h * v) - grad_at(w - h * v)) / (2.0 * h)


@dataclass(frozen=True)
class WeightHessianDiag:
    """Per-layer weight-Hessian diagonals with their traces."""

    layer_diags: tuple  # one (n_l, n_{l-1}) array per selected layer, else None
    layer_traces: tuple  # one float per selected layer, else None
    total_trace: float


def weight_hessian_diag(
    network: Network, X, y, kind: str = "mse", layers=None
) -> WeightHessianDiag:
    """Diagonal of the weight Hessian by second differences of the loss.

    h_ii = (L(w + h e_i) - 2 L(w) + L(w - h e_i)) / h^2 with
    h = cbrt(eps) * (1 + |w_i|).  ``layers`` restricts the computation to a
    subset of 0-based layer indices; the total trace sums the selected ones.
    """
    _check_loss_kind(kind)
    X, y = _as_batch(X, y, network.architecture.input_width)
    activation = network.architecture.activation
    n_layers = network.architecture.n_layers
    selected = range(n_layers) if layers is None else sorted(set(layers))
    if any(not 0 <= l < n_layers for l in selected):
        raise ValueError(f"layer filter {list(selected)} out of range for {n_layers} layers")

    work = [W.copy() for W in network.weights]
    base = _batch_loss_raw(work, activation, X, y, kind)
    diags: list = [None] * n_layers
    traces: list = [None] * n_layers
    for l in selected:
        W = work[l]
        diag = np.empty_like(W)
        flat = W.ravel()
        dflat = diag.ravel()
        for i in range(flat.size):
            w0 = flat[i]
            h = CBRT_EPS * (1.0 + abs(w0))
            flat[i] = w0 + h
            lp = _batch_loss_raw(work, activation, X, y, kind)
            flat[i] = w0 - h
            lm = _batch_loss_raw(work, activation, X, y, kind)
            flat[i] = w0
            dflat[i] = (lp - 2.0 * base + lm) / (h * h)
        diags[l] = diag
        traces[l] = float(diag.sum())
    total = float(sum(t for t in traces if t is not None))
    return WeightHessianDiag(tuple(diags), tuple(traces), total)


def full_weight_hessian(
    network: Network, X, y, kind: str = "mse", cap: int = DEFAULT_WEIGHT_HESSIAN_CAP
) -> np.ndarray:
    """Materialize the d x d weight Hessian, symmetrized.

    Central differences of the analytic gradient, one column per weight.
    Capped: traces at larger d should go through ``weight_hessian_diag`` and
    spectra-free quadratic forms through ``hvp_weights``.
    """
    _check_loss_kind(kind)
    X, y = _as_batch(X, y, network.architecture.input_width)
    d = network.param_count
    if d > cap:
        raise ValueError(
            f"parameter count {d} exceeds the materialization cap {cap}; "
            "use weight_hessian_diag or hvp_weights instead"
        )
    arch, activation = network.architecture, network.architecture.activation
    w = flatten_weights(network.weights)

    def grad_at(wvec):
        grads, _ = _grad_weights_raw(unflatten_weights(arch, wvec), activation, X, y, kind)
        return flatten_weights(grads)

    H = np.empty((d, d))
    for i in range(d):
        h = CBRT_EPS * (1.0 + abs(w[i]))
        e = np.zeros(d)
        e[i] = h
        H[:, i] = (grad_at(w + e) - grad_at(w - e)) / (2.0 * h)
    return (H + H.T) / 2.0


# ── Symmetric eigen decomposition (cyclic Jacobi) ────────────────────────────


@dataclass(frozen=True)
class SpectrumReport:
    """Sorted eigenvalues plus the count below -tolerance (the index)."""

    eigenvalues: np.ndarray
    index: int
    tolerance: float

    def __post_init__(self):
        eig = np.asarray(self.eigenvalues, dtype=np.float64).copy()
        eig.setflags(write=False)
        object.__setattr__(self, "eigenvalues", eig)


def _jacobi_eigenvalues(S: np.ndarray, rel_off_tol: float = 1e-10, max_sweeps: int = 100):
    """Eigenvalues of a symmetric matrix by cyclic plane rotations.

    Sweeps rotate away every off-diagonal element in turn until the
    off-diagonal Frobenius norm falls below rel_off_tol * ||S||_F.
    """
    A = np.array(S, dtype=np.float64)
    n = A.shape[0]
    if n == 1:
        return A.ravel().copy()
    norm = float(np.linalg.norm(A))
    if norm == 0.0:
        return np.zeros(n)
    target = rel_off_tol * norm
    diag_idx = np.diag_indices(n)
    for _ in range(max_sweeps):
        # Norm of the off-diagonal part directly; the sum-of-squares
        # difference cancels catastrophically once nearly diagonal.
        mask = A.copy()
        mask[diag_idx] = 0.0
        off = float(np.linalg.norm(mask))
        if off <= target:
            return np.diag(A).copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:  # theta^2 would overflow; use the limit
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) if theta != 0.0 else 1.0
                    t /= abs(theta) + np.sqrt(theta * theta + 1.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0
    raise RuntimeError(f"Jacobi eigen iteration did not converge in {max_sweeps} sweeps")


def spectrum(matrix, tolerance: float | None = None) -> SpectrumReport:
    """Eigen-spectrum and critical-point index of a symmetric matrix.

    The index counts eigenvalues below -tolerance; the default tolerance is
    1e-8 * (1 + |trace| / d).  Rejects matrices asymmetric beyond 1e-6
    relative.
    """
    A = np.asarray(matrix, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > 1e-6 * max(scale, 1e-300):
        raise ValueError(f"matrix asymmetry {asym:.3e} exceeds 1e-6 relative to {scale:.3e}")
    S = (A + A.T) / 2.0
    d = S.shape[0]
    if tolerance is None:
        tolerance = 1e-8 * (1.0 + abs(float(np.trace(S))) / d)
    eig = np.sort(_jacobi_eigenvalues(S))
    index = int(np.count_nonzero(eig < -tolerance))
    return SpectrumReport(eigenvalues=eig, index=index, tolerance=float(tolerance))
