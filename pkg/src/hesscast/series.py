"""Series generation, CSV ingestion, returns, normalization and windowing.

Turns raw univariate sequences into supervised one-step-ahead forecasting
datasets: each input is a window of ``n`` past values, the target is the
next value.  Multiple series of equal length can be windowed jointly, in
which case the per-series windows are concatenated (in the order given)
and the target is taken from the *first* series.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Series",
    "NormStats",
    "WindowedDataset",
    "gen_gaussian_noise",
    "gen_noisy_sine",
    "load_csv",
    "save_series_csv",
    "to_returns",
    "window",
]


# ── Domain types ─────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class Series:
    """A raw univariate sequence with provenance metadata."""

    values: np.ndarray
    name: str = "series"
    origin: str = "csv"  # gaussian-noise | noisy-sine | csv

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        # Length 1 is allowed so returns of a two-point series exist; every
        # consumer that needs more (generators, CSV loading, windowing)
        # checks its own minimum.
        if values.ndim != 1 or values.size < 1:
            raise ValueError(f"series '{self.name}' needs at least 1 value, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"series '{self.name}' contains non-finite values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class NormStats:
    """Standardization statistics computed on the training slice only."""

    mean: float
    std: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.std)):
            raise ValueError("normalization statistics must be finite")
        if self.std <= 0.0:
            raise ValueError(f"degenerate series: std must be > 0, got {self.std}")

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def invert(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    """Supervised forecasting pairs with a chronological train/test split.

    ``inputs[i]`` holds the ``n`` values preceding ``targets[i]`` for each
    constituent series, concatenated; pairs are in chronological order and
    the first ``split_index`` of them form the training set.
    """

    inputs: np.ndarray  # (n_pairs, n0)
    targets: np.ndarray  # (n_pairs,)
    split_index: int
    window: int  # per-series window length n
    norm: NormStats | None = None  # stats of the target series, None if unnormalized
    series_norms: tuple[NormStats, ...] = field(default=())

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if inputs.ndim != 2 or targets.ndim != 1:
            raise ValueError("inputs must be 2-D and targets 1-D")
        if inputs.shape[0] != targets.shape[0]:
            raise ValueError("inputs and targets must have equal length")
        if not 1 <= self.split_index <= len(targets) - 1:
            raise ValueError(
                f"split_index must lie in [1, {len(targets) - 1}], got {self.split_index}"
            )
        for arr, name in ((inputs, "inputs"), (targets, "targets")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contain non-finite values")
        inputs = inputs.copy()
        targets = targets.copy()
        inputs.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return int(self.targets.size)

    @property
    def input_width(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def train_inputs(self) -> np.ndarray:
        return self.inputs[: self.split_index]

    @property
    def train_targets(self) -> np.ndarray:
        return self.targets[: self.split_index]

    @property
    def test_inputs(self) -> np.ndarray:
        return self.inputs[self.split_index :]

    @property
    def test_targets(self) -> np.ndarray:
        return self.targets[self.split_index :]


# ── Generators ───────────────────────────────────────────────────────────────


def gen_gaussian_noise(count: int, seed: int) -> Series:
    """Draw ``count`` i.i.d. standard-normal values, deterministic per seed."""
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    rng = np.random.default_rng(seed)
    return Series(rng.standard_normal(count), name="gaussian-noise", origin="gaussian-noise")


def gen_noisy_sine(count: int, c: float, seed: int) -> Series:
    """Noisy seasonal signal y_i = sin(0.1 i) + c * eps_i, eps_i ~ N(0, 1)."""
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    if c < 0:
        raise ValueError(f"noise amplitude c must be >= 0, got {c}")
    rng = np.random.default_rng(seed)
    t = np.arange(count, dtype=np.float64)
    values = np.sin(0.1 * t) + c * rng.standard_normal(count)
    return Series(values, name=f"noisy-sine(c={c:g})", origin="noisy-sine")


# ── CSV I/O ──────────────────────────────────────────────────────────────────


def load_csv(path, column) -> Series:
    """Load one numeric column from a UTF-8, comma-separated file.

    The first row must be a header; ``column`` selects by name or 0-based
    index.  Blank lines are skipped, non-numeric cells are rejected with
    their 1-based file line number.
    """
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"file not found: {path}")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = None
        col_idx = None
        values = []
        for line_no, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if header is None:
                header = [cell.strip() for cell in row]
                if isinstance(column, int):
                    if not 0 <= column < len(header):
                        raise ValueError(
                            f"column index {column} out of range for {len(header)} columns in {path}"
                        )
                    col_idx = column
                else:
                    try:
                        col_idx = header.index(str(column))
                    except ValueError:
                        raise ValueError(
                            f"column '{column}' not found in {path} (columns: {', '.join(header)})"
                        ) from None
                continue
            if col_idx >= len(row):
                raise ValueError(f"row {line_no} of {path} has no column {col_idx}")
            cell = row[col_idx].strip()
            try:
                values.append(float(cell))
            except ValueError:
                raise ValueError(
                    f"cannot parse '{cell}' as a number at row {line_no}, column '{column}' of {path}"
                ) from None
    if header is None:
        raise ValueError(f"{path} is empty")
    if len(values) < 2:
        raise ValueError(f"need at least 2 numeric rows in {path}, got {len(values)}")
    name = header[col_idx] if col_idx < len(header) else str(column)
    return Series(np.asarray(values), name=name, origin="csv")


def save_series_csv(series: Series, path, column: str = "value") -> None:
    """Write a one-column CSV with a header row, 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(column + "\n")
        for v in series.values:
            handle.write(format(v, ".17g") + "\n")


# ── Transformations ──────────────────────────────────────────────────────────


def to_returns(series: Series) -> Series:
    """First differences r_t = S_t - S_{t-1}; output is one shorter."""
    if len(series) < 2:
        raise ValueError("need at least 2 values to compute returns")
    return Series(np.diff(series.values), name=f"{series.name}-returns", origin=series.origin)


def window(
    series_list,
    n: int,
    split: float = 0.7,
    normalize: bool = False,
) -> WindowedDataset:
    """Window one or more series into supervised pairs and split in time.

    Pair ``i`` maps the previous ``n`` values of every series (concatenated
    per series, in list order) to the next value of the first series.
    ``split_index = floor(split * n_pairs)``.  With ``normalize`` set, each
    series is standardized by the mean/std of its own training slice (the
    values touched by training pairs); targets use the first series' stats.
    """
    if isinstance(series_list, Series):
        series_list = [series_list]
    series_list = list(series_list)
    if not series_list:
        raise ValueError("need at least one series")
    if n < 1:
        raise ValueError(f"window length must be >= 1, got {n}")
    if not 0.0 < split < 1.0:
        raise ValueError(f"split fraction must lie in (0, 1), got {split}")
    length = len(series_list[0])
    for s in series_list[1:]:
        if len(s) != length:
            raise ValueError(
                f"all series must have equal length, got {length} and {len(s)} ('{s.name}')"
            )
    pairs = length - n
    if pairs < 2:
        raise ValueError(
            f"series of length {length} with window {n} yields {pairs} pairs, need >= 2"
        )
    split_index = int(np.floor(split * pairs))
    if not 1 <= split_index <= pairs - 1:
        raise ValueError(
            f"split {split} of {pairs} pairs gives split_index {split_index}, outside [1, {pairs - 1}]"
        )

    # Training pairs touch source values [0, n + split_index); stats come
    # from that slice only so later values cannot leak in.
    series_norms: tuple[NormStats, ...] = ()
    raw = [s.values for s in series_list]
    if normalize:
        stats = []
        for v in raw:
            train_slice = v[: n + split_index]
            stats.append(NormStats(float(np.mean(train_slice)), float(np.std(train_slice))))
        series_norms = tuple(stats)
        raw = [st.apply(v) for st, v in zip(stats, raw)]

    inputs = np.empty((pairs, n * len(raw)), dtype=np.float64)
    for k, v in enumerate(raw):
        for i in range(pairs):
            inputs[i, k * n : (k + 1) * n] = v[i : i + n]
    targets = raw[0][n:].copy()

    return WindowedDataset(
        inputs=inputs,
        targets=targets,
        split_index=split_index,
        window=n,
        norm=series_norms[0] if normalize else None,
        series_norms=series_norms,
    )
