"""Command-line interface.

Subcommands:

* ``generate``: formula dataset to train/test CSVs plus meta.json
* ``train``: one scheme on one dataset; writes the model and a report
* ``compile``: s-expression file to network-weights JSON
* ``verify``: compiled network against the expression interpreter
* ``bench``: full experiment config to a rank report (JSON + CSV)

Exit codes: 0 success, 1 usage error, 2 data/domain error, 3 more diverged
runs than allowed.  All outputs are deterministic given ``--seed``.
"""

import argparse
import json
import sys
from pathlib import Path

from .bench import ExperimentConfig, load_dataset, run_experiment
from .compiler import compile_ast, verify
from .data import (
    GENERATORS,
    csv_write,
    fit_preprocessor,
    make_classification,
    split_and_fit,
    subset,
)
from .errors import CombuError
from .expr import Bounds, num_vars, parse_sexpr
from .metrics import accuracy as accuracy_metric, macro_f1, mae, mse
from .network import load_network, save_network
from .rng import Rng
from .training import TrainConfig, build_mlp, predict, train

USAGE_ERROR, DATA_ERROR, DIVERGED = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(USAGE_ERROR)


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _read_bounds(path) -> list:
    """Bounds file: {"x1": {"lo": ..., "hi": ..., "min_abs": ...}, ...}."""
    with open(path) as fh:
        raw = json.load(fh)
    bounds = []
    for i in range(1, len(raw) + 1):
        key = f"x{i}"
        if key not in raw:
            raise CombuError(f"bounds file must name consecutive variables; missing {key!r}")
        entry = raw[key]
        bounds.append(Bounds(entry["lo"], entry["hi"], entry.get("min_abs", 0.0)))
    return bounds


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = Rng(args.seed)
    ds = GENERATORS[args.generator](args.n, rng.child(0))
    if args.task == "classification":
        ds = make_classification(ds, args.bins)
    n_test = int(round(ds.n * args.test_fraction))
    if n_test < 1 or n_test >= ds.n:
        raise CombuError(f"split of {ds.n} rows at {args.test_fraction} leaves an empty side")
    perm = rng.child(1).permutation(ds.n)
    test = subset(ds, perm[:n_test])
    train_ds = subset(ds, perm[n_test:])
    csv_write(train_ds, out / f"{args.generator}_train.csv")
    csv_write(test, out / f"{args.generator}_test.csv")

    prep = fit_preprocessor(train_ds)
    meta = {
        "generator": args.generator,
        "seed": args.seed,
        "n": ds.n,
        "task": ds.task,
        "n_classes": ds.n_classes,
        "test_fraction": args.test_fraction,
        "train_rows": train_ds.n,
        "test_rows": test.n,
        "bin_edges": ds.meta.get("bin_edges"),
        "scaler": {
            "features": [
                {"name": c.name, "mean": c.mean, "std": c.std, "scaled": c.scaled}
                for c in prep.columns
            ],
            "target": {
                "mean": prep.target_mean,
                "std": prep.target_std,
                "scaled": prep.target_scaled,
            },
        },
    }
    _write_json(out / "meta.json", meta)
    print(f"wrote {args.generator}_train.csv ({train_ds.n} rows), "
          f"{args.generator}_test.csv ({test.n} rows), meta.json under {out}")
    return 0


def cmd_train(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.generator:
        dataset = {"generator": args.generator, "n": args.n}
    else:
        dataset = {"csv": args.csv, "target": args.target}
    cfg = ExperimentConfig(
        dataset=_dataset_spec(dataset),
        schemes=[args.scheme],
        task=args.task,
        n_bins=args.bins,
        model_size=args.size,
        train=TrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            dropout_rate=args.dropout,
        ),
        repeats=1,
        base_seed=args.seed,
    )
    ds = load_dataset(cfg)
    r = Rng(args.seed)
    train_d, test_d, _ = split_and_fit(ds, cfg.test_fraction, r.child(1))
    out_dim = ds.n_classes if cfg.task == "classification" else 1
    head = "softmax" if cfg.task == "classification" else "identity"
    srng = r.child(2)
    net = build_mlp(train_d.X.shape[1], out_dim, args.size, cfg.schemes[0], srng, head=head)
    net, curve = train(net, train_d, cfg.train, rng=srng)
    preds = predict(net, test_d.X, cfg.task)
    if cfg.task == "regression":
        metrics = {"mae": mae(preds, test_d.y), "mse": mse(preds, test_d.y)}
    else:
        metrics = {
            "accuracy": accuracy_metric(preds, test_d.y),
            "f1": macro_f1(preds, test_d.y, test_d.n_classes),
        }
    save_network(net, out / "model.json")
    _write_json(out / "train_report.json", {
        "scheme": cfg.schemes[0].name,
        "seed": args.seed,
        "epochs": args.epochs,
        "loss_curve": curve,
        "test_metrics": metrics,
    })
    print(f"test metrics: {metrics}")
    return 0


def _dataset_spec(d):
    from .bench import DatasetSpec

    return DatasetSpec(**d)


def cmd_compile(args) -> int:
    ast = parse_sexpr(Path(args.expr).read_text())
    bounds = _read_bounds(args.bounds)
    net = compile_ast(ast, bounds)
    save_network(net, args.out)
    print(f"compiled {num_vars(ast)}-variable expression "
          f"into {len(net.layers)} layers -> {args.out}")
    return 0


def cmd_verify(args) -> int:
    net = load_network(args.net)
    ast = parse_sexpr(Path(args.expr).read_text())
    bounds = _read_bounds(args.bounds)
    err = verify(net, ast, bounds, args.samples, Rng(args.seed))
    result = {"max_rel_error": err, "samples": args.samples, "seed": args.seed}
    if args.out:
        _write_json(args.out, result)
    print(json.dumps(result, sort_keys=True))
    return 0


def cmd_bench(args) -> int:
    with open(args.config) as fh:
        raw = json.load(fh)
    experiments = raw["experiments"] if "experiments" in raw else [raw]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    total_diverged = 0
    for entry in experiments:
        if args.seed is not None:
            entry["base_seed"] = args.seed
        if args.repeats is not None:
            entry["repeats"] = args.repeats
        cfg = ExperimentConfig.from_dict(entry)
        report = run_experiment(cfg, jobs=args.jobs)
        prefix = out / cfg.name if len(experiments) > 1 else out
        prefix.mkdir(parents=True, exist_ok=True)
        (prefix / "report.json").write_text(report.to_json() + "\n")
        (prefix / "report.csv").write_text(report.to_csv())
        total_diverged += sum(len(v) for v in report.diverged.values())
        print(report.to_csv(), end="")
    if total_diverged > args.max_diverged:
        print(f"warning: {total_diverged} diverged runs exceed the allowed {args.max_diverged}",
              file=sys.stderr)
        return DIVERGED
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="combu", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a formula dataset as CSVs")
    p.add_argument("generator", choices=sorted(GENERATORS))
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--task", choices=("regression", "classification"), default="regression")
    p.add_argument("--bins", type=int, default=5)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("train", help="train one scheme on one dataset")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--generator", choices=sorted(GENERATORS))
    src.add_argument("--csv")
    p.add_argument("--target", default="target")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--scheme", default="combu")
    p.add_argument("--task", choices=("regression", "classification"), default="regression")
    p.add_argument("--bins", type=int, default=5)
    p.add_argument("--size", choices=("small", "large"), default="large")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=500)
    p.add_argument("--learning-rate", type=float, default=5e-4)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("compile", help="compile an s-expression into network weights")
    p.add_argument("expr", help="file holding the prefix s-expression")
    p.add_argument("--bounds", required=True, help="JSON file of per-variable bounds")
    p.add_argument("--out", default="network.json")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("verify", help="check a compiled network against the interpreter")
    p.add_argument("--net", required=True)
    p.add_argument("--expr", required=True)
    p.add_argument("--bounds", required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="run an experiment config and report ranks")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="bench_out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-diverged", type=int, default=0)
    p.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except CombuError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
