"""Command line entry point: ``fogsched <subcommand> [flags]``.

Errors are reported on stderr as one JSON object with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from fogsched.harness.config import SCHEDULERS, ConfigError, ExperimentConfig, load_config

EXIT_CONFIG = 2
EXIT_FAILURE = 1


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
    return cfg.with_overrides(seed=args.seed, out=args.out, scheduler=getattr(args, "scheduler", None))


def cmd_gen_data(args) -> dict:
    from fogsched.harness.datasets import generate_dataset

    cfg = _config(args)
    n = args.intervals or cfg.dataset_intervals
    path = generate_dataset(cfg, n, Path(cfg.output_dir) / "lambda.jsonl")
    return {"dataset": str(path), "intervals": n}


def cmd_gen_data_star(args) -> dict:
    from fogsched.harness.datasets import generate_dataset_star

    cfg = _config(args)
    n = args.intervals or cfg.dataset_intervals
    path = generate_dataset_star(cfg, n, Path(cfg.output_dir) / "lambda_star.jsonl", cfg.models.gobi, cfg.models.lstm)
    return {"dataset": str(path), "intervals": n}


MODEL_FILES = {"f": "f.npz", "f*": "f_star.npz", "lstm": "lstm.npz"}


def cmd_train(args) -> dict:
    from fogsched.harness.training import train

    cfg = _config(args)
    return train(args.model, args.dataset, Path(cfg.output_dir) / MODEL_FILES[args.model], cfg.training, cfg.seed)


def cmd_run(args) -> dict:
    from fogsched.harness.runner import run_experiment

    cfg = _config(args)
    result = run_experiment(cfg)
    return {"out": cfg.output_dir, **result.manifest()}


def cmd_compare(args) -> dict:
    from fogsched.harness.runner import compare

    table = compare(args.runs, args.out)
    keys = ("run", "scheduler", "seed", "mean_objective", "delta_mean_objective")
    return {"runs": [{k: row[k] for k in keys} for row in table]}


def cmd_calibrate_slo(args) -> dict:
    from fogsched.harness.runner import calibrate_slo

    cfg = _config(args)
    return calibrate_slo(cfg, args.reference, Path(cfg.output_dir) / "slo.json")


def cmd_convert_bitbrain(args) -> dict:
    from fogsched.harness.bitbrain import convert

    files = []
    for p in args.inputs:
        p = Path(p)
        files.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    n = convert(files, args.out, args.delta, args.app_class, args.max_intervals)
    return {"traces": str(args.out), "series": n}


def _common(p, scheduler=False):
    p.add_argument("--config", help="YAML experiment config (defaults apply when omitted)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output directory (overrides config and FOGSCHED_OUT)")
    if scheduler:
        p.add_argument("--scheduler", choices=SCHEDULERS, help="override the configured scheduler")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fogsched", description="Fog scheduling simulator and schedulers.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="log a random-scheduler run as a surrogate dataset")
    _common(p)
    p.add_argument("--intervals", type=int, help="dataset length (default: config dataset_intervals)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("gen-data-star", help="dataset for the extended surrogate (needs f and LSTM models)")
    _common(p)
    p.add_argument("--intervals", type=int, help="dataset length (default: config dataset_intervals)")
    p.set_defaults(func=cmd_gen_data_star)

    p = sub.add_parser("train", help="train f, f* or the LSTM on a dataset")
    _common(p)
    p.add_argument("--model", choices=sorted(MODEL_FILES), required=True)
    p.add_argument("--dataset", required=True, help="JSON-lines dataset file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", help="simulate one experiment and write its outputs")
    _common(p, scheduler=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="tabulate the results of several runs")
    p.add_argument("runs", nargs="+", help="run directories or result.json files")
    p.add_argument("--out", help="directory for comparison.csv and comparison.json")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("calibrate-slo", help="per-class 95th percentile response times from a reference run")
    _common(p)
    p.add_argument("--reference", choices=SCHEDULERS, default="ga")
    p.set_defaults(func=cmd_calibrate_slo)

    p = sub.add_parser("convert-bitbrain", help="convert Bitbrain VM files into the trace CSV format")
    p.add_argument("inputs", nargs="+", help="VM csv files or directories of them")
    p.add_argument("--out", required=True, help="trace CSV to write")
    p.add_argument("--delta", type=float, default=300.0)
    p.add_argument("--app-class", help="label every converted series with this class")
    p.add_argument("--max-intervals", type=int)
    p.set_defaults(func=cmd_convert_bitbrain)
    return parser


def _fail(exc: BaseException, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        summary = args.func(args)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except (OSError, ValueError, KeyError, FloatingPointError) as exc:
        return _fail(exc, EXIT_FAILURE)
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
