"""Command line interface.

Subcommands: ``gen`` synthesizes a series to CSV, ``train`` fits one
forecaster and emits its trace and metrics, ``sweep`` runs a full
experiment grid from a JSON config, ``probe`` measures input-noise
robustness of a saved network, ``entropy`` evaluates the expected-entropy
formula, and ``spectrum`` reports the weight-Hessian eigenvalues of a
saved small network.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .derivatives import full_weight_hessian, spectrum
from .entropy import EntropyParams, expected_entropy_terms, lambda_from_arch
from .estimator import MLPForecaster
from .metrics import compute_report, noise_robustness_probe
from .network import Architecture, load_network, save_network
from .series import gen_gaussian_noise, gen_noisy_sine, load_csv, save_series_csv, to_returns, window
from .svgplot import emit_scatter
from .sweep import ExperimentConfig, emit_csv, emit_json, run_sweep

__all__ = ["main"]


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("dataset")
    group.add_argument(
        "--kind",
        choices=["gaussian-noise", "noisy-sine", "csv"],
        default="noisy-sine",
        help="series source (default: noisy-sine)",
    )
    group.add_argument("--count", type=int, default=101, help="generated series length")
    group.add_argument("--c", type=float, default=0.1, help="noise amplitude of the noisy sine")
    group.add_argument("--data-seed", type=int, default=0, help="generator seed")
    group.add_argument("--csv", action="append", default=[], metavar="PATH", help="CSV file (repeatable)")
    group.add_argument("--column", action="append", default=[], help="value column per CSV file")
    group.add_argument("--returns", action="store_true", help="difference CSV series into returns")
    group.add_argument("--window", type=int, default=5, help="history window length n")
    group.add_argument("--split", type=float, default=0.7, help="train fraction")
    group.add_argument(
        "--normalize",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="standardize with training-slice statistics",
    )


def _dataset_from_args(args):
    if args.kind == "csv":
        if not args.csv:
            raise ValueError("--kind csv requires at least one --csv PATH")
        if len(args.column) != len(args.csv):
            raise ValueError("need one --column per --csv file")
        series = []
        for path, column in zip(args.csv, args.column):
            col = int(column) if column.lstrip("-").isdigit() else column
            s = load_csv(path, col)
            if args.returns:
                s = to_returns(s)
            series.append(s)
    elif args.kind == "gaussian-noise":
        series = [gen_gaussian_noise(args.count, args.data_seed)]
    else:
        series = [gen_noisy_sine(args.count, args.c, args.data_seed)]
    return window(series, n=args.window, split=args.split, normalize=args.normalize)


def _parse_batch(value: str):
    return value if value == "full" else int(value)


def _parse_hidden(value: str) -> tuple[int, ...]:
    value = value.strip()
    if not value:
        return ()
    return tuple(int(part) for part in value.split(","))


# ── Subcommands ──────────────────────────────────────────────────────────────


def _cmd_gen(args) -> int:
    if args.kind == "gaussian-noise":
        series = gen_gaussian_noise(args.count, args.seed)
    else:
        series = gen_noisy_sine(args.count, args.c, args.seed)
    save_series_csv(series, args.out)
    print(f"wrote {len(series)} values to {args.out}")
    return 0


def _cmd_train(args) -> int:
    dataset = _dataset_from_args(args)
    model = MLPForecaster(
        hidden_widths=_parse_hidden(args.hidden),
        activation=args.activation,
        learning_rate=args.lr,
        batch_size=_parse_batch(args.batch),
        iterations=args.iters,
        loss=args.loss,
        normalize_gradient=args.normalize_gradient,
        random_state=args.seed,
        snapshot_every=args.snapshot_every,
    )
    model.fit(dataset.train_inputs, dataset.train_targets)
    report = compute_report(model.network_, dataset, kind=args.loss, seed=args.seed)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / "trace.csv"
    with trace_path.open("w", encoding="utf-8") as handle:
        handle.write("iteration,train_loss\n")
        for record in model.trace_.records:
            handle.write(f"{record.iteration},{format(record.train_loss, '.17g')}\n")
    metrics_path = out_dir / "metrics.json"
    metrics_path.write_text(json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8")
    network_path = out_dir / "network.json"
    save_network(model.network_, network_path)
    print(
        f"train_loss={report.train_loss:.6g} test_loss={report.test_loss:.6g} "
        f"tr_hx={report.tr_input_hessian:.6g} -> {out_dir}/"
    )
    return 0


def _cmd_sweep(args) -> int:
    config = ExperimentConfig.load(args.config)
    report = run_sweep(config, parallel=args.parallel)
    out_dir = Path(args.out_dir or config.output_dir or "sweep-out")
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_csv(report, out_dir / "runs.csv")
    emit_json(report, out_dir / "report.json")
    for pair in args.scatter or []:
        try:
            x_column, y_column = pair.split(",")
        except ValueError:
            raise ValueError(f"--scatter expects 'XCOL,YCOL', got '{pair}'") from None
        emit_scatter(report, x_column, y_column, out_dir / f"scatter_{x_column}_vs_{y_column}.svg")
    print(
        f"{len(report.rows)} runs ({len(report.failures)} failures) over "
        f"{len(config.grid_points())} grid points x {len(config.seeds)} seeds -> {out_dir}/"
    )
    return 0


def _cmd_probe(args) -> int:
    net = load_network(args.network)
    dataset = _dataset_from_args(args)
    if args.slice == "train":
        X, y = dataset.train_inputs, dataset.train_targets
    else:
        X, y = dataset.test_inputs, dataset.test_targets
    result = noise_robustness_probe(
        net, X, y, kind=args.loss, alpha=args.alpha, draws=args.draws, seed=args.seed
    )
    print(
        f"delta_hat={result.delta_hat:.10g} "
        f"trace_prediction={result.trace_prediction:.10g} "
        f"relative_gap={result.relative_gap:.6g}"
    )
    return 0


def _cmd_entropy(args) -> int:
    if args.arch:
        widths = _parse_hidden(args.arch)
        if len(widths) < 2:
            raise ValueError("--arch needs at least 'input,hidden' widths")
        arch = Architecture(input_width=widths[0], hidden_widths=widths[1:])
        lam = lambda_from_arch(arch)
        layers = arch.n_layers
    else:
        if args.lam is None:
            raise ValueError("provide --lambda or --arch")
        lam = args.lam
        layers = args.layers
    params = EntropyParams(
        lam=lam, layers=layers, rho=args.rho, sigma=args.sigma, loss_level=args.loss_level
    )
    terms = expected_entropy_terms(params)
    print(f"lambda         {lam:.10g}")
    print(f"path_term      {terms.path_term:.10g}")
    print(f"volume_term    {terms.volume_term:.10g}")
    print(f"integral_term  {terms.integral_term:.10g}")
    print(f"entropy        {terms.total:.10g}")
    return 0


def _cmd_spectrum(args) -> int:
    net = load_network(args.network)
    dataset = _dataset_from_args(args)
    H = full_weight_hessian(net, dataset.train_inputs, dataset.train_targets, kind=args.loss)
    report = spectrum(H, tolerance=args.tol)
    eig = report.eigenvalues
    doc = {
        "dimension": int(eig.size),
        "index": report.index,
        "tolerance": report.tolerance,
        "trace": float(eig.sum()),
        "min_eigenvalue": float(eig[0]),
        "max_eigenvalue": float(eig[-1]),
        "eigenvalues": [float(v) for v in eig],
    }
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(
        f"d={doc['dimension']} index={doc['index']} trace={doc['trace']:.6g} "
        f"range=[{doc['min_eigenvalue']:.6g}, {doc['max_eigenvalue']:.6g}]"
    )
    return 0


# ── Parser ───────────────────────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hesscast",
        description="Train small dense forecasters and measure their generalization "
        "via input/weight Hessian and Jacobian metrics.",
    )
    parser.add_argument("--version", action="version", version=f"hesscast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize a series and write it to CSV")
    p.add_argument("--kind", choices=["gaussian-noise", "noisy-sine"], required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--c", type=float, default=0.1, help="noise amplitude (noisy-sine)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("train", help="train one forecaster, emit trace + metrics + network")
    _add_dataset_args(p)
    p.add_argument("--hidden", default="100", help="comma-separated hidden widths, '' for none")
    p.add_argument("--activation", choices=["tanh", "relu", "linear"], default="tanh")
    p.add_argument("--loss", choices=["mse", "mae"], default="mse")
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch", default="full", help="batch size or 'full'")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--normalize-gradient", action="store_true")
    p.add_argument("--snapshot-every", type=int, default=None)
    p.add_argument("--seed", type=int, default=0, help="init + batch sampling seed")
    p.add_argument("--out-dir", default="train-out")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("sweep", help="run an experiment grid from a JSON config")
    p.add_argument("config", help="ExperimentConfig JSON path")
    p.add_argument("--parallel", type=int, default=1, metavar="K")
    p.add_argument("--out-dir", default=None, help="overrides config output_dir")
    p.add_argument("--scatter", action="append", metavar="XCOL,YCOL", help="emit scatter SVG (repeatable)")
    p.add_argument("--seed", type=int, default=None, help="unused; seeds come from the config")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("probe", help="input-noise robustness probe on a saved network")
    p.add_argument("--network", required=True, help="network JSON from 'train'")
    _add_dataset_args(p)
    p.add_argument("--loss", choices=["mse", "mae"], default="mse")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--draws", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0, help="Monte-Carlo seed")
    p.add_argument("--slice", choices=["train", "test"], default="train")
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("entropy", help="expected-entropy formula with per-term breakdown")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--loss-level", type=float, default=0.0)
    p.add_argument("--arch", default=None, help="derive lambda from widths 'n0,h1,...'")
    p.add_argument("--seed", type=int, default=None, help="unused; evaluation is deterministic")
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("spectrum", help="weight-Hessian eigen report for a saved small network")
    p.add_argument("--network", required=True)
    _add_dataset_args(p)
    p.add_argument("--loss", choices=["mse", "mae"], default="mse")
    p.add_argument("--tol", type=float, default=None, help="negative-eigenvalue tolerance")
    p.add_argument("--out", default=None, help="write the full eigen report as JSON")
    p.add_argument("--seed", type=int, default=None, help="unused; evaluation is deterministic")
    p.set_defaults(func=_cmd_spectrum)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
