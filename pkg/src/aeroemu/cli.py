"""Command-line interface: generate / train / evaluate / predict / bench / plot.

Config precedence is flags > JSON config file (--config) > built-in
defaults. Every run writes a JSON manifest next to its primary output with
the resolved configuration, so deterministic subcommands can be reproduced
exactly from the manifest alone.

Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

from . import __version__
from . import datasets, evaluation, network, surrogate, training, transforms
from .benchmark import BenchConfig, run_bench
from .errors import (
    AeroemuError,
    NumericalFailureError,
    UsageError,
)
from .schema import builtin_schema

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _write_manifest(out_path, subcommand, config, inputs, outputs, duration,
                    status):
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
        "schema_hash": f"{builtin_schema().schema_hash:016x}",
        "tool_version": __version__,
        "duration_seconds": duration,
        "exit_status": status,
    }
    path = str(out_path) + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)


def _load_config_file(path):
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _resolved(args, config_file_values, fields):
    """flags > config file > dataclass defaults (argparse defaults = None)."""
    out = {}
    for name, default in fields.items():
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            out[name] = flag_value
        elif name in config_file_values:
            out[name] = config_file_values[name]
        else:
            out[name] = default
    return out


def _add_common(parser):
    parser.add_argument("--config", help="JSON config file (flags take precedence)")
    parser.add_argument("--threads", type=int, default=1,
                        help="BLAS thread budget (default: 1)")


def _apply_threads(n):
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        pass


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aeroemu",
        description="Aerosol microphysics step emulator toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen_defaults = surrogate.SurrogateConfig()
    p = sub.add_parser("generate", help="write a synthetic dataset pair")
    _add_common(p)
    p.add_argument("--out-inputs", required=True)
    p.add_argument("--out-outputs", required=True)
    p.add_argument("--format", choices=["binary", "csv"], default="binary")
    p.add_argument("--samples", type=int, default=None,
                   help=f"number of rows (default: {gen_defaults.n_samples})")
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed (default: {gen_defaults.seed})")
    for name in ("nucleation", "coagulation", "condensation", "water-uptake"):
        attr = name.replace("-", "_")
        p.add_argument(f"--{name}", type=float, default=None,
                       help=f"process strength (default: {getattr(gen_defaults, attr)})")
    p.add_argument("--zero-inflation", type=float, default=None,
                   help=f"process-inactive probability (default: {gen_defaults.zero_inflation})")

    tc = training.TrainConfig()
    p = sub.add_parser("train", help="fit the emulator network")
    _add_common(p)
    p.add_argument("--train", nargs=2, metavar=("INPUTS", "OUTPUTS"), required=True)
    p.add_argument("--val", nargs=2, metavar=("INPUTS", "OUTPUTS"), required=True)
    p.add_argument("--format", choices=["binary", "csv"], default="binary")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--history", help="per-epoch loss CSV output path")
    p.add_argument("--hidden", default=None,
                   help="comma-separated hidden widths, empty for linear"
                        " (default: 256,256)")
    p.add_argument("--activation", choices=["sigmoid", "tanh", "relu"],
                   default=None, help="hidden activation (default: sigmoid)")
    p.add_argument("--init-seed", type=int, default=None,
                   help="weight init seed (default: 0)")
    for name, default in (
        ("learning-rate", tc.learning_rate), ("weight-decay", tc.weight_decay),
        ("beta1", tc.beta1), ("beta2", tc.beta2), ("epsilon", tc.epsilon),
    ):
        p.add_argument(f"--{name}", type=float, default=None,
                       help=f"(default: {default})")
    for name, default in (
        ("batch-size", tc.batch_size), ("patience", tc.patience),
        ("max-epochs", tc.max_epochs), ("shuffle-seed", tc.shuffle_seed),
    ):
        p.add_argument(f"--{name}", type=int, default=None,
                       help=f"(default: {default})")

    p = sub.add_parser("evaluate", help="score a checkpoint on a dataset pair")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--outputs", required=True)
    p.add_argument("--format", choices=["binary", "csv"], default="binary")
    p.add_argument("--json-out", help="machine-readable report path")
    p.add_argument("--out", help="human-readable table path (default: stdout)")

    p = sub.add_parser("predict", help="run inference on an input file")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["binary", "csv"], default="binary")
    p.add_argument("--space", choices=["transformed", "tendency", "full"],
                   default="tendency")
    p.add_argument("--mass-fix", action="store_true",
                   help="clamp negative values; requires --space full")

    bc = BenchConfig()
    p = sub.add_parser("bench", help="time emulator vs reference step")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--samples", type=int, default=None,
                   help=f"(default: {bc.n_samples})")
    p.add_argument("--reps", type=int, default=None,
                   help=f"(default: {bc.repetitions})")
    p.add_argument("--warmup", type=int, default=None,
                   help=f"(default: {bc.warmup})")
    p.add_argument("--seed", type=int, default=None, help=f"(default: {bc.seed})")
    p.add_argument("--parallel", action="store_true",
                   help="allow multi-threaded BLAS in the emulator path")
    p.add_argument("--json-out", help="machine-readable result path")
    p.add_argument("--out", help="table output path (default: stdout)")

    p = sub.add_parser("plot", help="export scatter data per output variable")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--outputs", required=True)
    p.add_argument("--format", choices=["binary", "csv"], default="binary")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--variable", action="append",
                   help="variable to plot (repeatable; default: all outputs)")
    p.add_argument("--svg", action="store_true", help="also write SVG scatters")
    p.add_argument("--max-points", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0, help="subsample seed")
    return parser


def _cmd_generate(args, file_cfg):
    defaults = dataclasses.asdict(surrogate.SurrogateConfig())
    mapping = {"samples": "n_samples"}
    resolved = {}
    for flag, field in (("samples", "n_samples"), ("seed", "seed"),
                        ("nucleation", "nucleation"), ("coagulation", "coagulation"),
                        ("condensation", "condensation"),
                        ("water_uptake", "water_uptake"),
                        ("zero_inflation", "zero_inflation")):
        v = getattr(args, flag)
        resolved[field] = v if v is not None else file_cfg.get(field, defaults[field])
    config = surrogate.SurrogateConfig(**resolved)
    schema = builtin_schema()
    inputs = surrogate.generate_inputs(config, schema)
    outputs = surrogate.reference_step(inputs, config, schema)
    datasets.write_batch(args.out_inputs, inputs, args.format)
    datasets.write_batch(args.out_outputs, outputs, args.format)
    return resolved, [], [args.out_inputs, args.out_outputs], args.out_inputs


def _cmd_train(args, file_cfg):
    schema = builtin_schema()
    tc_fields = {f.name: f.default for f in dataclasses.fields(training.TrainConfig)}
    resolved = _resolved(args, file_cfg, tc_fields)
    config = training.TrainConfig(**resolved)

    hidden = args.hidden if args.hidden is not None else file_cfg.get("hidden", "256,256")
    widths = [int(w) for w in hidden.split(",") if w.strip()] if hidden else []
    activation = args.activation or file_cfg.get("activation", "sigmoid")
    init_seed = args.init_seed if args.init_seed is not None else file_cfg.get("init_seed", 0)
    dims = [schema.count_inputs()] + widths + [schema.count_outputs()]

    train_in, train_out = datasets.read_dataset(args.train[0], args.train[1],
                                                args.format, schema)
    val_in, val_out = datasets.read_dataset(args.val[0], args.val[1],
                                            args.format, schema)
    spec = transforms.fit_transform_spec(
        train_in, transforms.compute_tendencies(train_in, train_out, schema), schema)

    def std(inputs, outputs):
        x = transforms.apply_pipeline(inputs, spec, schema, "input").data
        tend = transforms.compute_tendencies(inputs, outputs, schema)
        y = transforms.apply_pipeline(tend, spec, schema, "output").data
        return x.astype("float32"), y.astype("float32")

    tx, ty = std(train_in, train_out)
    vx, vy = std(val_in, val_out)
    net = network.init_network(dims, activation, init_seed)
    best, history = train_with_log(net, tx, ty, vx, vy, config)
    tmp = str(args.out) + ".tmp"
    network.save_checkpoint(best, spec, schema, tmp)
    os.replace(tmp, args.out)
    written = [args.out]
    if args.history:
        with open(args.history, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,train_mse,val_mse\n")
            for epoch, tr, va in history:
                fh.write(f"{epoch},{tr!r},{va!r}\n")
        written.append(args.history)
    resolved.update({"hidden": hidden, "activation": activation,
                     "init_seed": init_seed})
    return resolved, list(args.train) + list(args.val), written, args.out


def train_with_log(net, tx, ty, vx, vy, config):
    return training.train(net, tx, ty, vx, vy, config,
                          log=lambda msg: print(msg, file=sys.stderr))


def _cmd_evaluate(args, file_cfg):
    schema = builtin_schema()
    net, spec = network.load_checkpoint(args.checkpoint, schema)
    inputs, outputs = datasets.read_dataset(args.inputs, args.outputs,
                                            args.format, schema)
    report = evaluation.evaluate(net, spec, inputs, outputs, schema)
    written = []
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.format_table() + "\n")
        written.append(args.out)
    else:
        print(report.format_table())
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        written.append(args.json_out)
    primary = args.out or args.json_out or (args.checkpoint + ".eval")
    return {}, [args.checkpoint, args.inputs, args.outputs], written, primary


def _cmd_predict(args, file_cfg):
    if args.mass_fix and args.space != "full":
        raise UsageError("--mass-fix requires --space full")
    schema = builtin_schema()
    net, spec = network.load_checkpoint(args.checkpoint, schema)
    inputs = datasets.read_batch(args.inputs, args.format, schema, "input")
    x = transforms.apply_pipeline(inputs, spec, schema, "input")
    pred = network.forward(net, x.data).astype("float64")
    pred_std = datasets.SampleBatch(schema.output_names, pred, "standardized")
    if args.space == "transformed":
        means, stds = spec.stats_for("output")
        out = datasets.SampleBatch(schema.output_names,
                                   pred_std.data * stds + means, "raw")
    else:
        tend = transforms.invert_pipeline(pred_std, spec, schema, "output")
        if args.space == "tendency":
            out = tend
        else:
            out = transforms.add_tendencies(inputs, tend, schema)
            if args.mass_fix:
                out, _ = evaluation.mass_fix(out)
    datasets.write_batch(args.out, out, args.format)
    return ({"space": args.space, "mass_fix": args.mass_fix},
            [args.checkpoint, args.inputs], [args.out], args.out)


def _cmd_bench(args, file_cfg):
    schema = builtin_schema()
    net, spec = network.load_checkpoint(args.checkpoint, schema)
    defaults = {"n_samples": BenchConfig.n_samples,
                "repetitions": BenchConfig.repetitions,
                "warmup": BenchConfig.warmup, "seed": BenchConfig.seed}
    resolved = {
        "n_samples": args.samples if args.samples is not None
        else file_cfg.get("n_samples", defaults["n_samples"]),
        "repetitions": args.reps if args.reps is not None
        else file_cfg.get("repetitions", defaults["repetitions"]),
        "warmup": args.warmup if args.warmup is not None
        else file_cfg.get("warmup", defaults["warmup"]),
        "seed": args.seed if args.seed is not None
        else file_cfg.get("seed", defaults["seed"]),
    }
    if args.parallel:
        _apply_threads(os.cpu_count() or 1)
    result = run_bench(net, spec, schema, BenchConfig(**resolved))
    written = []
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(result.format_table() + "\n")
        written.append(args.out)
    else:
        print(result.format_table())
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(result.to_json())
        written.append(args.json_out)
    resolved["parallel"] = args.parallel
    primary = args.out or args.json_out or (args.checkpoint + ".bench")
    return resolved, [args.checkpoint], written, primary


def _cmd_plot(args, file_cfg):
    schema = builtin_schema()
    net, spec = network.load_checkpoint(args.checkpoint, schema)
    inputs, outputs = datasets.read_dataset(args.inputs, args.outputs,
                                            args.format, schema)
    x = transforms.apply_pipeline(inputs, spec, schema, "input")
    pred = network.forward(net, x.data).astype("float64")
    truth_tend = transforms.compute_tendencies(inputs, outputs, schema)
    truth_std = transforms.apply_pipeline(truth_tend, spec, schema, "output")
    means, stds = spec.stats_for("output")
    variables = args.variable or list(schema.output_names)
    os.makedirs(args.out_dir, exist_ok=True)
    written = []
    for name in variables:
        if name not in schema.output_names:
            raise UsageError(f"{name!r} is not an output variable")
        j = schema.output_names.index(name)
        # De-standardize so the exported pairs are transformed-space values.
        p = pred[:, j] * stds[j] + means[j]
        t = truth_std.data[:, j] * stds[j] + means[j]
        stem = name.replace(" ", "_").replace(".", "")
        csv_path = os.path.join(args.out_dir, f"{stem}.csv")
        svg_path = os.path.join(args.out_dir, f"{stem}.svg") if args.svg else None
        evaluation.export_scatter(p, t, name, csv_path, svg_path,
                                  args.max_points, args.seed)
        written.append(csv_path)
        if svg_path:
            written.append(svg_path)
    return ({"variables": variables, "max_points": args.max_points,
             "seed": args.seed},
            [args.checkpoint, args.inputs, args.outputs], written, args.out_dir)


_COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "predict": _cmd_predict,
    "bench": _cmd_bench,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_threads(args.threads)
    start = time.perf_counter()
    try:
        file_cfg = _load_config_file(args.config)
        resolved, inputs, outputs, primary = _COMMANDS[args.subcommand](args, file_cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (AeroemuError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    duration = time.perf_counter() - start
    _write_manifest(primary, args.subcommand, resolved, inputs, outputs,
                    duration, EXIT_OK)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
