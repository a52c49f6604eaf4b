"""Command-line entry points: validate, score, fit, run, report."""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .corpus import experiments_in
from .errors import ConfigError, SurpstatError
from .pipeline import (
    RunConfig,
    RunReport,
    emit_report,
    read_surprisal_table,
    run as run_pipeline,
    stats_from_table,
    write_surprisal_table,
    _load_corpora,
    _score_to_table,
)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to a JSON run config")
    sub.add_argument("--out", help="output directory (overrides config out_dir)")
    sub.add_argument("--jobs", type=int, default=1, help="parallel (backend, experiment) cells")
    sub.add_argument(
        "--seed",
        type=int,
        help="seed for synthetic-data generators; the pipeline itself is deterministic",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surpstat",
        description="Surprisal scoring and mixed-model condition statistics.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("validate", "check config and corpora, print a summary"),
        ("score", "score all backends, write the surprisal table"),
        ("fit", "fit statistics from an existing surprisal table"),
        ("run", "score, fit, and write the full report"),
        ("report", "re-render report files from a stored report.json"),
    ):
        _add_common(subs.add_parser(name, help=help_text))
    return parser


def _out_dir(args, config: RunConfig) -> str:
    out = args.out or config.out_dir
    if not out:
        raise ConfigError("no output directory: pass --out or set out_dir in the config")
    return out


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None:
        random.seed(args.seed)
        np.random.seed(args.seed % (2**32))
    try:
        return _dispatch(args)
    except SurpstatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


def _dispatch(args) -> int:
    config = RunConfig.from_file(args.config)

    if args.command == "validate":
        items = _load_corpora(config)
        experiments = config.experiments or tuple(experiments_in(items))
        print(f"corpora: {len(config.corpora)} file(s), {len(items)} items")
        for exp in experiments:
            subset = [i for i in items if i.experiment_id == exp]
            conds = {}
            for item in subset:
                conds[item.condition.value] = conds.get(item.condition.value, 0) + 1
            summary = ", ".join(f"{c}={n}" for c, n in sorted(conds.items()))
            print(f"experiment {exp}: {len(subset)} items ({summary})")
        print(f"backends: {len(config.backends)}")
        print("ok")
        return 0

    if args.command == "score":
        out = Path(_out_dir(args, config))
        items = _load_corpora(config)
        rows, _ = _score_to_table(config, items, jobs=args.jobs)
        out.mkdir(parents=True, exist_ok=True)
        table_path = out / "surprisals.tsv"
        with open(table_path, "w", encoding="utf-8", newline="") as fp:
            write_surprisal_table(fp, rows)
        print(table_path)
        return 0

    if args.command == "fit":
        out = _out_dir(args, config)
        if not config.surprisal_table:
            raise ConfigError("fit needs a 'surprisal_table' path in the config")
        with open(config.surprisal_table, "r", encoding="utf-8", newline="") as fp:
            rows = read_surprisal_table(fp)
        report = stats_from_table(rows, config, jobs=args.jobs)
        for path in emit_report(report, out):
            print(path)
        return 0

    if args.command == "run":
        out = Path(_out_dir(args, config))
        items = _load_corpora(config)
        rows, missing = _score_to_table(config, items, jobs=args.jobs)
        report = stats_from_table(rows, config, missing_by_cell=missing, jobs=args.jobs)
        out.mkdir(parents=True, exist_ok=True)
        table_path = out / "surprisals.tsv"
        with open(table_path, "w", encoding="utf-8", newline="") as fp:
            write_surprisal_table(fp, rows)
        print(table_path)
        for path in emit_report(report, str(out)):
            print(path)
        return 0

    if args.command == "report":
        out = _out_dir(args, config)
        if not config.out_dir:
            raise ConfigError("report re-rendering needs out_dir in the config")
        source = Path(config.out_dir) / "report.json"
        with open(source, "r", encoding="utf-8") as fp:
            report = RunReport.from_json_dict(json.load(fp))
        for path in emit_report(report, out):
            print(path)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
