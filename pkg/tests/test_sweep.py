"""Sweep runner: orchestration, correlations, report emission."""

import csv
import json

import numpy as np
import pytest

from hesscast import (
    ExperimentConfig,
    emit_csv,
    emit_json,
    pearson_correlation,
    rank_correlation,
    run_sweep,
)
from hesscast.metrics import MetricsReport
from hesscast.sweep import FailureRow, RunRow, SweepReport


def tiny_config(**overrides):
    doc = {
        "dataset": {"kind": "noisy-sine", "count": 40, "c": 0.1, "seed": 0},
        "window": 3,
        "split": 0.7,
        "normalize": True,
        "hidden_widths": [5],
        "activation": "tanh",
        "grid": {"learning_rate": [0.05], "batch_size": ["full"], "iterations": [100]},
        "seeds": [0, 1],
    }
    doc.update(overrides)
    return ExperimentConfig.from_dict(doc)


def make_report(values, config=None):
    """Synthetic report with controlled (tr_hx, test_loss) columns."""
    rows = []
    for i, (hx, tl) in enumerate(values):
        rep = MetricsReport(
            train_loss=0.1,
            test_loss=float(tl),
            gap=float(tl) - 0.1,
            tr_input_hessian=float(hx),
            jacobian_frobenius=1.0,
            tr_weight_hessian_total=1.0,
            tr_weight_hessian_per_layer=(0.5, 0.5),
            scaled_quadform=1.0,
            hit_rate=0.5,
            seed=i,
        )
        rows.append(RunRow(seed=i, eta=0.05, batch="full", iters=100, report=rep))
    return SweepReport(config=config or tiny_config(), rows=tuple(rows))


class TestRunSweep:
    def test_smoke_two_seeds(self):
        report = run_sweep(tiny_config())
        assert len(report.rows) == 2
        assert not report.failures
        for row in report.rows:
            for col in report.columns():
                if col in ("batch", "status"):
                    continue
                value = row.value(col)
                assert value is not None and np.isfinite(value)

    def test_failures_recorded_not_fatal(self):
        config = tiny_config(
            grid={"learning_rate": [0.05, 1e6], "batch_size": ["full"], "iterations": [100]},
            normalize=False,
        )
        report = run_sweep(config)
        assert len(report.rows) + len(report.failures) == 4
        assert len(report.failures) == 2
        assert all(f.status == "diverged" for f in report.failures)
        assert all("diverged" in f.error for f in report.failures)

    def test_row_accounting_and_aggregates(self):
        config = tiny_config(seeds=[0, 1, 2])
        report = run_sweep(config)
        assert len(report.rows) == len(config.grid_points()) * 3
        agg = report.aggregates[0]
        assert agg["n"] == 3
        assert np.isfinite(agg["median"]["test_loss"])
        assert agg["iqr"]["test_loss"] >= 0.0

    def test_parallel_matches_serial(self):
        config = tiny_config(seeds=[0, 1, 2, 3])
        serial = run_sweep(config, parallel=1)
        parallel = run_sweep(config, parallel=4)
        for a, b in zip(serial.rows, parallel.rows):
            assert a == b


class TestRankCorrelation:
    def test_perfectly_monotone(self):
        report = make_report([(i, i * 2.0 + 1.0) for i in range(8)])
        assert rank_correlation(report, "tr_hx", "test_loss") == pytest.approx(1.0)

    def test_reversed_monotone(self):
        report = make_report([(i, -3.0 * i) for i in range(8)])
        assert rank_correlation(report, "tr_hx", "test_loss") == pytest.approx(-1.0)

    def test_independent_columns_near_zero(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(1000)
        y = rng.standard_normal(1000)
        rho = rank_correlation(make_report(list(zip(x, y))), "tr_hx", "test_loss")
        assert abs(rho) < 0.1
        # Permutation-sampling oracle: the observed value must look like a
        # draw from the permutation null.
        null = []
        for _ in range(200):
            null.append(
                rank_correlation(make_report(list(zip(x, rng.permutation(y)))), "tr_hx", "test_loss")
            )
        assert abs(rho) <= float(np.quantile(np.abs(null), 0.995)) + 1e-9

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(1)
        pairs = list(zip(rng.standard_normal(50), rng.standard_normal(50)))
        base = rank_correlation(make_report(pairs), "tr_hx", "test_loss")
        warped = rank_correlation(
            make_report([(np.exp(a), b) for a, b in pairs]), "tr_hx", "test_loss"
        )
        assert warped == pytest.approx(base, abs=1e-12)

    def test_constant_column_is_undefined(self):
        report = make_report([(1.0, i * 1.0) for i in range(6)])
        assert rank_correlation(report, "tr_hx", "test_loss") is None

    def test_too_few_rows(self):
        report = make_report([(1.0, 2.0)] * 4)
        with pytest.raises(ValueError, match="at least 5"):
            rank_correlation(report, "tr_hx", "test_loss")

    def test_unknown_column(self):
        report = make_report([(1.0, 2.0)] * 6)
        with pytest.raises(ValueError, match="unknown column"):
            rank_correlation(report, "nope", "test_loss")

    def test_pearson_reference(self):
        report = make_report([(i, 2.0 * i) for i in range(10)])
        assert pearson_correlation(report, "tr_hx", "test_loss") == pytest.approx(1.0)


class TestEmission:
    def test_csv_column_contract(self, tmp_path):
        report = run_sweep(tiny_config())
        path = tmp_path / "runs.csv"
        emit_csv(report, path)
        with path.open() as fh:
            header = fh.readline().strip().split(",")
        assert header == [
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
            "tr_hw_layer_1",
            "tr_hw_layer_2",
            "scaled_quadform",
            "hit_rate",
            "status",
        ]

    def test_csv_round_trip_bit_exact(self, tmp_path):
        report = run_sweep(tiny_config(seeds=[0, 1, 2]))
        path = tmp_path / "runs.csv"
        emit_csv(report, path)
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        for parsed, row in zip(rows, report.rows):
            assert float(parsed["test_loss"]) == row.report.test_loss
            assert float(parsed["tr_hw_layer_2"]) == row.report.tr_weight_hessian_per_layer[1]
            assert parsed["batch"] == "full"
            assert parsed["status"] == "ok"

    def test_json_mirrors_csv(self, tmp_path):
        report = run_sweep(tiny_config())
        emit_csv(report, tmp_path / "r.csv")
        emit_json(report, tmp_path / "r.json")
        doc = json.loads((tmp_path / "r.json").read_text())
        with (tmp_path / "r.csv").open(newline="") as fh:
            csv_rows = list(csv.DictReader(fh))
        assert doc["columns"] == list(csv_rows[0].keys())
        for jr, cr in zip(doc["rows"], csv_rows):
            for col in doc["columns"]:
                if col in ("batch", "status"):
                    assert str(jr[col]) == cr[col]
                else:
                    assert float(jr[col]) == float(cr[col])
        assert "tr_hx_vs_test_loss" in doc["correlations"]

    def test_empty_report_is_header_only(self, tmp_path):
        report = SweepReport(config=tiny_config(), rows=())
        path = tmp_path / "empty.csv"
        emit_csv(report, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1 and lines[0].startswith("seed,")

    def test_failure_rows_keep_columns(self, tmp_path):
        report = SweepReport(
            config=tiny_config(),
            rows=(),
            failures=(FailureRow(seed=0, eta=1e6, batch="full", iters=100, error="diverged"),),
        )
        path = tmp_path / "f.csv"
        emit_csv(report, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].split(",")[-1] == "diverged"
        assert len(lines[1].split(",")) == len(lines[0].split(","))


class TestConfigValidation:
    def test_missing_keys(self):
        with pytest.raises(ValueError, match="missing required key"):
            ExperimentConfig.from_dict({"dataset": {"kind": "noisy-sine", "count": 10, "seed": 0}})

    def test_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            ExperimentConfig.from_dict(
                {
                    "dataset": {"kind": "noisy-sine", "count": 10, "seed": 0},
                    "window": 2,
                    "grid": {"learning_rate": [0.1], "batch_size": ["full"], "iterations": [10]},
                    "typo_key": 3,
                }
            )

    def test_empty_grid_axis(self):
        with pytest.raises(ValueError, match="grid"):
            tiny_config(grid={"learning_rate": [], "batch_size": ["full"], "iterations": [10]})

    def test_csv_files_must_exist(self):
        with pytest.raises(ValueError, match="not found"):
            tiny_config(dataset={"kind": "csv", "paths": ["/nonexistent.csv"], "columns": ["a"]})

    def test_default_seeds_are_twenty(self):
        doc = {
            "dataset": {"kind": "noisy-sine", "count": 40, "c": 0.1, "seed": 0},
            "window": 3,
            "grid": {"learning_rate": [0.05], "batch_size": ["full"], "iterations": [10]},
        }
        assert ExperimentConfig.from_dict(doc).seeds == tuple(range(20))

    def test_config_load_missing_file(self, tmp_path):
        with pytest.raises(ValueError, match="missing.json"):
            ExperimentConfig.load(tmp_path / "missing.json")
