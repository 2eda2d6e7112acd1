"""Driver: run the full pipeline end to end, regenerate tables, aggregate
across-seed verdicts."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig
from .data import MissingDataError
from .pipeline import Run
from .tables import (
    aggregate_verdicts,
    build_labeling_doc,
    build_table1,
    build_table2,
    build_table3,
)


def _base_config(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        per_digit=args.per_digit,
        epochs=args.epochs,
        data_source="synthetic" if args.synthetic else "mnist",
        mnist_dir=args.mnist_dir,
        labeling_mixins=tuple(args.mixins),
        labeling_sample_sizes=tuple(args.sizes),
        finetune_epochs=args.finetune_epochs,
    )


def cmd_run_all(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = _base_config(args)
    seeds = list(range(args.seeds))
    for seed in seeds:
        config = replace(base, seed=seed)
        run_dir = out_dir / f"seed{seed}"
        print(f"== seed {seed} -> {run_dir}")
        started = time.perf_counter()
        run = Run(config, run_dir)
        for stage in (
            run.stage_data,
            run.stage_features,
            run.stage_derive,
            run.stage_cnn_zero,
            run.stage_table1,
            run.stage_table2,
            run.stage_table3,
            run.stage_labeling,
        ):
            stage_started = time.perf_counter()
            stage()
            print(f"   {stage.__name__}: {time.perf_counter() - stage_started:.1f}s")
        print(f"   total: {time.perf_counter() - started:.1f}s")
    verdicts = aggregate_verdicts(out_dir, seeds)
    (out_dir / "verdicts.json").write_text(json.dumps(verdicts, indent=2) + "\n")
    print(json.dumps(
        {table: entry["accepted"] for table, entry in verdicts.items()}, indent=2
    ))
    return 0


def cmd_tables(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    cfg = ExperimentConfig.load(run_dir / "config.json")
    builders = {
        "table1": build_table1,
        "table2": build_table2,
        "table3": build_table3,
        "labeling": build_labeling_doc,
    }
    for name, builder in builders.items():
        doc = builder(run_dir, cfg)
        path = run_dir / "tables" / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {path}")
    return 0


def cmd_verdicts(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    seeds = sorted(
        int(p.name.removeprefix("seed"))
        for p in out_dir.glob("seed*")
        if p.is_dir() and p.name.removeprefix("seed").isdigit()
    )
    if not seeds:
        print(f"error: no seed directories under {out_dir}", file=sys.stderr)
        return 1
    verdicts = aggregate_verdicts(out_dir, seeds)
    (out_dir / "verdicts.json").write_text(json.dumps(verdicts, indent=2) + "\n")
    print(json.dumps(verdicts, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotharness",
        description="rotated-digit coverage experiments driving the combocov CLI",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-all", help="run the full pipeline for N seeds")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--per-digit", type=int, default=1000,
                   help="images per digit (reference protocol: 1000)")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--finetune-epochs", type=int, default=5)
    p.add_argument("--seeds", type=int, default=3, help="number of seeds to run")
    p.add_argument("--synthetic", action="store_true",
                   help="use the built-in glyph corpus instead of MNIST")
    p.add_argument("--mnist-dir", default="mnist")
    p.add_argument("--mixins", type=int, nargs="+", default=[0, 50, 100])
    p.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    p.set_defaults(func=cmd_run_all)

    p = sub.add_parser("tables", help="regenerate table documents from a run directory")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("verdicts", help="aggregate band verdicts across seeds")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_verdicts)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MissingDataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
