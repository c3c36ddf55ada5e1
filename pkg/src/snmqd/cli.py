"""Command line entry point.

Subcommands: ``train``, ``evaluate``, ``experiment``, ``hps``, ``sensitivity``,
``toy``. Exit codes: 0 success, 1 usage error, 2 training failure, 3 IO error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .data import DatasetFormatError, Stats, standardize, synth_sinusoid, to_full_scope
from .ensemble import EnsembleTrainingError, load_ensemble, predict, save_ensemble, train_ensemble
from .metrics import evaluate
from .neuralnet import TrainingFailure

EXIT_OK, EXIT_USAGE, EXIT_TRAINING, EXIT_IO = 0, 1, 2, 3

_AGG_ALIASES = {"snm": "snm", "sem": "sem", "sem-paper": "sem-paper", "none": "none"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="key = value config file; run with --print-schema for the keys")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--alpha", type=float, help="miscoverage level (default 0.05)")
    p.add_argument("--aggregation", choices=sorted(_AGG_ALIASES), help="aggregation method")
    p.add_argument("--dataset", help="dataset name (e.g. yacht, sinusoid)")
    p.add_argument("--data", help="path to CSV (last column is the target)")
    p.add_argument("--header", action="store_true", help="CSV has a header row")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="snmqd", description=__doc__.splitlines()[0])
    parser.add_argument("--print-schema", action="store_true", help="list config file keys and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, help_ in [
        ("train", "train one ensemble on a whole dataset and save it"),
        ("evaluate", "evaluate a saved ensemble on a dataset"),
        ("experiment", "run the repeated-trial protocol"),
        ("hps", "random hyper-parameter search"),
        ("sensitivity", "lambda1 x lambda2 grid with and without the ordering penalty"),
        ("toy", "synthetic sinusoid end to end, writes plot data"),
    ]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "evaluate":
            p.add_argument("--checkpoint", required=True, help="ensemble directory written by train")
        if name in ("experiment", "toy"):
            p.add_argument("--format", default="table_text", choices=["table_text", "json", "csv"])
        if name == "hps":
            p.add_argument("--budget", type=int, default=20)
        if name == "sensitivity":
            p.add_argument("--grid", default="0,0.25,0.5,0.75,0.975", help="comma separated values used for both lambdas")
    return parser


def _config_from_args(args, base=None):
    base = base or harness.ExperimentConfig()
    if args.config:
        base = harness.load_config(args.config, base)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.dataset:
        overrides["dataset"] = args.dataset
    if args.data:
        overrides["dataset_path"] = args.data
    if args.header:
        overrides["has_header"] = True
    cfg = harness.build_config(overrides, base)
    if args.aggregation:
        cfg = cfg.with_(aggregations=(args.aggregation,), ensemble=cfg.ensemble.with_(aggregation=args.aggregation))
    return cfg


def _write(text, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_train(args, cfg):
    ds = harness.load_dataset(cfg)
    idx = np.arange(ds.n)
    X, y, stats = standardize(ds, "train_stats", idx)
    ens = train_ensemble(X, y, cfg.ensemble.with_(master_seed=cfg.master_seed))
    out = args.out or "ensemble"
    save_ensemble(ens, out, extra={"stats": stats.to_dict(), "dataset": ds.name})
    print(f"saved {ens.m} members to {out} ({ens.retries} retries)")


def _cmd_evaluate(args, cfg):
    ens, manifest = load_ensemble(args.checkpoint)
    stats = Stats.from_dict(manifest["stats"])
    ds = harness.load_dataset(cfg)
    full = Stats.of(ds.X, ds.y)
    agg = args.aggregation or ens.config.aggregation
    alpha = args.alpha or ens.config.alpha
    if agg == "none":
        raise ValueError("evaluate needs an aggregating method")
    batch = predict(ens, stats.transform_X(ds.X), agg, alpha, ens.config.fit)
    batch = to_full_scope(batch, stats, full)
    rep = evaluate(batch, full.transform_y(ds.y))
    _write(json.dumps(rep.to_dict(), indent=2) + "\n", args.out)


def _cmd_experiment(args, cfg):
    res = harness.run_experiment(cfg)
    _write(harness.emit_report(res, args.format), args.out)
    if res.ok_trials == []:
        return EXIT_TRAINING
    return EXIT_OK


def _cmd_hps(args, cfg):
    ds = harness.load_dataset(cfg)
    space = harness.HpsSpace(budget=args.budget)
    scores, best = harness.run_hps(space, ds, cfg.master_seed, cfg.ensemble)
    rows = [{"index": s.index, **s.params, "picp": s.picp, "mpiw": s.mpiw, "mse": s.mse, "failed": s.failed} for s in scores]
    _write(json.dumps({"selected": best.index, "params": best.params, "scores": rows}, indent=2) + "\n", args.out)


def _cmd_sensitivity(args, cfg):
    ds = harness.load_dataset(cfg)
    grid = [float(v) for v in args.grid.split(",")]
    cells = harness.run_sensitivity(ds, grid, grid, (0.0, 10.0), cfg.ensemble.train, cfg.master_seed)
    lines = ["lambda1\tlambda2\txi\tpicp\tnmpiw\tmse\tfailed"]
    for c in cells:
        lines.append(f"{c.lambda1}\t{c.lambda2}\t{c.xi}\t{c.picp:.4f}\t{c.nmpiw:.4f}\t{c.mse:.4f}\t{int(c.failed)}")
    _write("\n".join(lines) + "\n", args.out)


def _cmd_toy(args, cfg):
    cfg = cfg.with_(dataset="sinusoid", dataset_path=None)
    ds = synth_sinusoid(cfg.n_samples, seed=cfg.master_seed)
    res, arts = harness.run_experiment(cfg, ds, keep_artefacts=True)
    out = Path(args.out or "toy_output")
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(harness.emit_report(res, args.format))
    for t, art in zip(res.trials, arts):
        if art is None:
            continue
        agg = cfg.aggregations[0]
        batch = harness.aggregate_all(art["members"], (agg,), cfg.model, cfg.ensemble.alpha, cfg.ensemble.fit)[agg]
        harness.emit_plot_data(art["X_test"], batch, art["y_test"], out / f"plot_trial{t.trial}.tsv")
    sys.stdout.write(harness.emit_report(res, "table_text"))


_COMMANDS = {
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "experiment": _cmd_experiment,
    "hps": _cmd_hps,
    "sensitivity": _cmd_sensitivity,
    "toy": _cmd_toy,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_schema:
        print("\n".join(harness.CONFIG_SCHEMA))
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from_args(args)
        code = _COMMANDS[args.command](args, cfg)
    except (EnsembleTrainingError, TrainingFailure) as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (OSError, DatasetFormatError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
