"""Small dense forecasters with Hessian/Jacobian generalization metrics.

The package trains fully-connected networks for one-step-ahead time-series
forecasting and measures how well they generalize through second-order
sensitivity: input and weight Hessian traces, input Jacobian norms, the
rescaling-invariant quadratic form, and input-noise robustness probes.  A
sweep runner reproduces the hyperparameter-control experiments (learning
rate, batch size, iteration count) at desk scale.
"""

from .derivatives import (
    SpectrumReport,
    WeightHessianDiag,
    batch_loss,
    full_weight_hessian,
    grad_input,
    grad_weights,
    hvp_weights,
    input_hessian,
    input_jacobian,
    spectrum,
    weight_hessian_diag,
)
from .entropy import EntropyParams, expected_entropy, expected_entropy_terms, lambda_from_arch
from .estimator import MLPForecaster
from .metrics import (
    MetricsReport,
    ProbeResult,
    compute_report,
    hit_rate,
    jitter_regularizer_check,
    loss,
    mean_input_hessian_trace,
    mean_jacobian_frobenius,
    noise_robustness_probe,
    scaled_quadform,
)
from .network import (
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
from .series import (
    NormStats,
    Series,
    WindowedDataset,
    gen_gaussian_noise,
    gen_noisy_sine,
    load_csv,
    to_returns,
    window,
)
from .sweep import (
    ExperimentConfig,
    SweepReport,
    build_dataset,
    emit_csv,
    emit_json,
    pearson_correlation,
    rank_correlation,
    run_sweep,
)
from .svgplot import emit_scatter
from .training import (
    GradNoise,
    TrainConfig,
    TrainTrace,
    TrainingDivergedError,
    grad_noise_trace,
    sgd_train,
)

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "EntropyParams",
    "ExperimentConfig",
    "GradNoise",
    "MLPForecaster",
    "MetricsReport",
    "Network",
    "NormStats",
    "ProbeResult",
    "Series",
    "SpectrumReport",
    "SweepReport",
    "TrainConfig",
    "TrainTrace",
    "TrainingDivergedError",
    "WeightHessianDiag",
    "WindowedDataset",
    "alpha_scale",
    "batch_loss",
    "build_dataset",
    "compute_report",
    "emit_csv",
    "emit_json",
    "emit_scatter",
    "expected_entropy",
    "expected_entropy_terms",
    "flatten_weights",
    "forward",
    "forward_batch",
    "full_weight_hessian",
    "gen_gaussian_noise",
    "gen_noisy_sine",
    "grad_input",
    "grad_noise_trace",
    "grad_weights",
    "hit_rate",
    "hvp_weights",
    "init_network",
    "input_hessian",
    "input_jacobian",
    "jitter_regularizer_check",
    "lambda_from_arch",
    "load_csv",
    "load_network",
    "loss",
    "mean_input_hessian_trace",
    "mean_jacobian_frobenius",
    "noise_robustness_probe",
    "pearson_correlation",
    "rank_correlation",
    "run_sweep",
    "save_network",
    "scaled_quadform",
    "sgd_train",
    "spectrum",
    "to_returns",
    "unflatten_weights",
    "weight_hessian_diag",
    "window",
]
