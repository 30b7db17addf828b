"""Experiment orchestration: multi-seed sweeps over the training controls.

An ``ExperimentConfig`` (a JSON document) fixes a dataset, an architecture
and a grid over {learning_rate, batch_size, iterations}; ``run_sweep``
trains one forecaster per (grid point, seed), collects a metrics row per
run, and aggregates with medians/IQRs (sweep distributions carry
outliers).  Results are collected in deterministic grid x seed order, so
reports are byte-identical at any parallelism level.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimator import MLPForecaster
from .metrics import MetricsReport, compute_report
from .series import Series, WindowedDataset, gen_gaussian_noise, gen_noisy_sine, load_csv, to_returns, window
from .training import TrainingDivergedError

__all__ = [
    "ExperimentConfig",
    "FailureRow",
    "RunRow",
    "SweepReport",
    "build_dataset",
    "build_series",
    "emit_csv",
    "emit_json",
    "pearson_correlation",
    "rank_correlation",
    "run_sweep",
]

_BASE_COLUMNS = (
    "seed",
    "eta",
    "batch",
    "iters",
    "train_loss",
    "test_loss",
    "gap",
    "tr_hx",
    "jac_fro",
    "tr_hw_total",
)
_TAIL_COLUMNS = ("scaled_quadform", "hit_rate", "status")
_AGGREGATE_COLUMNS = (
    "train_loss",
    "test_loss",
    "gap",
    "tr_hx",
    "jac_fro",
    "tr_hw_total",
    "scaled_quadform",
    "hit_rate",
)
_CORRELATION_PAIRS = (
    ("tr_hx", "test_loss"),
    ("tr_hw_total", "test_loss"),
    ("jac_fro", "test_loss"),
    ("scaled_quadform", "test_loss"),
)


# ── Configuration ────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated sweep description; see ``from_dict`` for the JSON schema."""

    dataset: dict
    window: int
    grid: dict
    split: float = 0.7
    normalize: bool = True
    hidden_widths: tuple[int, ...] = (100,)
    activation: str = "tanh"
    loss: str = "mse"
    normalize_gradient: bool = False
    seeds: tuple[int, ...] = tuple(range(20))
    hit_rate: bool = True
    output_dir: str | None = None

    def __post_init__(self):
        for key in ("learning_rate", "batch_size", "iterations"):
            values = self.grid.get(key)
            if not values:
                raise ValueError(f"grid['{key}'] must be a non-empty list")
        if any(eta <= 0 for eta in self.grid["learning_rate"]):
            raise ValueError("grid learning rates must be > 0")
        if any(n < 1 for n in self.grid["iterations"]):
            raise ValueError("grid iteration counts must be >= 1")
        for m in self.grid["batch_size"]:
            if m != "full" and (not isinstance(m, int) or m < 1):
                raise ValueError(f"grid batch sizes must be positive integers or 'full', got {m!r}")
        if not self.seeds:
            raise ValueError("seed list must be non-empty")
        kind = self.dataset.get("kind")
        if kind not in ("gaussian-noise", "noisy-sine", "csv"):
            raise ValueError(f"unknown dataset kind '{kind}'")
        if kind == "csv":
            paths = self.dataset.get("paths") or []
            columns = self.dataset.get("columns") or []
            if not paths or len(paths) != len(columns):
                raise ValueError("csv dataset needs matching 'paths' and 'columns' lists")
            for p in paths:
                if not Path(p).is_file():
                    raise ValueError(f"dataset file not found: {p}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        """Build from a JSON document.

        Schema::

            {
              "dataset": {"kind": "noisy-sine", "count": 101, "c": 0.1, "seed": 0}
                       | {"kind": "gaussian-noise", "count": 100, "seed": 0}
                       | {"kind": "csv", "paths": [...], "columns": [...], "returns": true},
              "window": 5, "split": 0.7, "normalize": true,
              "hidden_widths": [100], "activation": "tanh",
              "loss": "mse", "normalize_gradient": false,
              "grid": {"learning_rate": [0.05], "batch_size": ["full"], "iterations": [1000]},
              "seeds": [0, 1, ...],            # default: 0..19
              "hit_rate": true,
              "output_dir": "out"
            }
        """
        known = {
            "dataset",
            "window",
            "grid",
            "split",
            "normalize",
            "hidden_widths",
            "activation",
            "loss",
            "normalize_gradient",
            "seeds",
            "hit_rate",
            "output_dir",
        }
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("dataset", "window", "grid"):
            if key not in doc:
                raise ValueError(f"config is missing required key '{key}'")
        kwargs = dict(doc)
        kwargs["hidden_widths"] = tuple(doc.get("hidden_widths", (100,)))
        kwargs["seeds"] = tuple(doc.get("seeds", range(20)))
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ValueError(f"config file not found: {path}")
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def as_dict(self) -> dict:
        return {
            "dataset": dict(self.dataset),
            "window": self.window,
            "split": self.split,
            "normalize": self.normalize,
            "hidden_widths": list(self.hidden_widths),
            "activation": self.activation,
            "loss": self.loss,
            "normalize_gradient": self.normalize_gradient,
            "grid": {k: list(v) for k, v in self.grid.items()},
            "seeds": list(self.seeds),
            "hit_rate": self.hit_rate,
            "output_dir": self.output_dir,
        }

    def grid_points(self) -> list[dict]:
        """Grid order: learning rate outermost, then batch size, iterations."""
        return [
            {"learning_rate": eta, "batch_size": batch, "iterations": iters}
            for eta in self.grid["learning_rate"]
            for batch in self.grid["batch_size"]
            for iters in self.grid["iterations"]
        ]

    @property
    def n_layers(self) -> int:
        return len(self.hidden_widths) + 1


def build_series(dataset: dict) -> list[Series]:
    """Materialize the series list described by a dataset config."""
    kind = dataset["kind"]
    if kind == "gaussian-noise":
        return [gen_gaussian_noise(int(dataset["count"]), int(dataset.get("seed", 0)))]
    if kind == "noisy-sine":
        return [
            gen_noisy_sine(
                int(dataset["count"]), float(dataset.get("c", 0.0)), int(dataset.get("seed", 0))
            )
        ]
    if kind == "csv":
        out = []
        for path, column in zip(dataset["paths"], dataset["columns"]):
            s = load_csv(path, column)
            if dataset.get("returns", False):
                s = to_returns(s)
            out.append(s)
        return out
    raise ValueError(f"unknown dataset kind '{kind}'")


def build_dataset(config: ExperimentConfig) -> WindowedDataset:
    return window(
        build_series(config.dataset),
        n=config.window,
        split=config.split,
        normalize=config.normalize,
    )


# ── Rows and report ──────────────────────────────────────────────────────────


@dataclass(frozen=True)
class RunRow:
    seed: int
    eta: float
    batch: object  # int or "full"
    iters: int
    report: MetricsReport
    status: str = "ok"

    def value(self, column: str):
        if column in ("seed", "eta", "batch", "iters", "status"):
            return getattr(self, column)
        if column == "tr_hx":
            return self.report.tr_input_hessian
        if column == "jac_fro":
            return self.report.jacobian_frobenius
        if column == "tr_hw_total":
            return self.report.tr_weight_hessian_total
        if column.startswith("tr_hw_layer_"):
            return self.report.tr_weight_hessian_per_layer[int(column.rsplit("_", 1)[1]) - 1]
        return getattr(self.report, column)


@dataclass(frozen=True)
class FailureRow:
    seed: int
    eta: float
    batch: object
    iters: int
    error: str
    status: str = "diverged"  # "diverged" for blow-ups, "error" otherwise


@dataclass(frozen=True)
class SweepReport:
    """One metrics row per successful run plus recorded failures.

    rows + failures always account for every (grid point, seed) pair.
    """

    config: ExperimentConfig
    rows: tuple[RunRow, ...]
    failures: tuple[FailureRow, ...] = ()
    aggregates: tuple[dict, ...] = ()
    correlations: dict = field(default_factory=dict)

    def columns(self) -> list[str]:
        layer_cols = [f"tr_hw_layer_{i}" for i in range(1, self.config.n_layers + 1)]
        return [*_BASE_COLUMNS, *layer_cols, *_TAIL_COLUMNS]

    def column_values(self, column: str) -> list:
        return [row.value(column) for row in self.rows]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def emit_csv(report: SweepReport, path) -> None:
    """Fixed column order, 17 significant digits, one line per run.

    Failed runs keep their identity columns; metric cells stay empty.
    """
    columns = report.columns()
    lines = [",".join(columns)]
    for row in report.rows:
        lines.append(",".join(_fmt(row.value(c)) for c in columns))
    for fail in report.failures:
        record = {"seed": fail.seed, "eta": fail.eta, "batch": fail.batch, "iters": fail.iters, "status": fail.status}
        lines.append(",".join(_fmt(record.get(c)) for c in columns))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_json(report: SweepReport, path) -> None:
    """JSON mirror of the CSV rows plus aggregates and correlations."""
    columns = report.columns()
    doc = {
        "config": report.config.as_dict(),
        "columns": columns,
        "rows": [{c: row.value(c) for c in columns} for row in report.rows],
        "failures": [
            {"seed": f.seed, "eta": f.eta, "batch": f.batch, "iters": f.iters, "status": f.status, "error": f.error}
            for f in report.failures
        ],
        "aggregates": list(report.aggregates),
        "correlations": report.correlations,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# ── Correlations ─────────────────────────────────────────────────────────────


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray):
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(np.sum(xc * xc))
    vy = float(np.sum(yc * yc))
    if vx == 0.0 or vy == 0.0:
        return None  # undefined for a constant column
    return float(np.sum(xc * yc) / np.sqrt(vx * vy))


def _extract_pair(report: SweepReport, metric: str, target: str):
    for column in (metric, target):
        if column not in report.columns():
            raise ValueError(f"unknown column '{column}'")
    pairs = [
        (row.value(metric), row.value(target))
        for row in report.rows
        if row.value(metric) is not None and row.value(target) is not None
    ]
    if len(pairs) < 5:
        raise ValueError(f"need at least 5 rows for a correlation, got {len(pairs)}")
    x = np.array([p[0] for p in pairs], dtype=np.float64)
    y = np.array([p[1] for p in pairs], dtype=np.float64)
    return x, y


def rank_correlation(report: SweepReport, metric: str, target: str):
    """Spearman rank correlation between two report columns.

    Returns None (undefined) when either column is constant.
    """
    x, y = _extract_pair(report, metric, target)
    return _pearson(_average_ranks(x), _average_ranks(y))


def pearson_correlation(report: SweepReport, metric: str, target: str):
    x, y = _extract_pair(report, metric, target)
    return _pearson(x, y)


# ── Execution ────────────────────────────────────────────────────────────────


def _sweep_worker(payload):
    """Run one (grid point, seed) cell.  Top level so it pickles."""
    config_doc, point, seed = payload
    config = ExperimentConfig.from_dict(config_doc)
    dataset = build_dataset(config)
    model = MLPForecaster(
        hidden_widths=config.hidden_widths,
        activation=config.activation,
        learning_rate=point["learning_rate"],
        batch_size=point["batch_size"],
        iterations=point["iterations"],
        loss=config.loss,
        normalize_gradient=config.normalize_gradient,
        random_state=seed,
    )
    try:
        model.fit(dataset.train_inputs, dataset.train_targets)
        report = compute_report(
            model.network_,
            dataset,
            kind=config.loss,
            seed=seed,
            config=dict(point),
            with_hit_rate=config.hit_rate,
        )
    except TrainingDivergedError as exc:
        return ("diverged", str(exc))
    except ValueError as exc:
        return ("error", str(exc))
    return ("ok", report)


def run_sweep(config: ExperimentConfig, parallel: int = 1) -> SweepReport:
    """Train and measure every (grid point, seed) cell.

    Divergent runs are recorded as failures, not fatal; raises only when
    every run failed.  Output is deterministic for a given config,
    independent of ``parallel``.
    """
    build_dataset(config)  # validate dataset construction before spawning work
    points = config.grid_points()
    tasks = [(point, seed) for point in points for seed in config.seeds]
    payloads = [(config.as_dict(), point, seed) for point, seed in tasks]
    if parallel <= 1:
        outcomes = [_sweep_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outcomes = list(pool.map(_sweep_worker, payloads))

    rows = []
    failures = []
    for (point, seed), (status, result) in zip(tasks, outcomes):
        ident = dict(
            seed=seed,
            eta=point["learning_rate"],
            batch=point["batch_size"],
            iters=point["iterations"],
        )
        if status == "ok":
            rows.append(RunRow(report=result, **ident))
        else:
            failures.append(FailureRow(error=result, status=status, **ident))
    if not rows:
        raise RuntimeError(f"all {len(tasks)} sweep runs failed; first error: {failures[0].error}")

    aggregates = _aggregate(points, rows)
    report = SweepReport(
        config=config,
        rows=tuple(rows),
        failures=tuple(failures),
        aggregates=tuple(aggregates),
    )
    correlations = {}
    for metric, target in _CORRELATION_PAIRS:
        key = f"{metric}_vs_{target}"
        try:
            correlations[key] = {
                "spearman": rank_correlation(report, metric, target),
                "pearson": pearson_correlation(report, metric, target),
            }
        except ValueError:
            correlations[key] = None
    return SweepReport(
        config=config,
        rows=report.rows,
        failures=report.failures,
        aggregates=report.aggregates,
        correlations=correlations,
    )


def _aggregate(points, rows) -> list[dict]:
    aggregates = []
    for point in points:
        cell = [
            r
            for r in rows
            if (r.eta, r.batch, r.iters)
            == (point["learning_rate"], point["batch_size"], point["iterations"])
        ]
        if not cell:
            continue
        entry = {
            "eta": point["learning_rate"],
            "batch": point["batch_size"],
            "iters": point["iterations"],
            "n": len(cell),
            "median": {},
            "iqr": {},
        }
        for column in _AGGREGATE_COLUMNS:
            values = [r.value(column) for r in cell if r.value(column) is not None]
            if not values:
                entry["median"][column] = None
                entry["iqr"][column] = None
                continue
            arr = np.asarray(values, dtype=np.float64)
            q1, q2, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
            entry["median"][column] = float(q2)
            entry["iqr"][column] = float(q3 - q1)
        aggregates.append(entry)
    return aggregates
