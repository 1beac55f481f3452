"""Command-line entry point: ``ramstap run | compare | show-config``.

Exit codes: 0 success, 1 config error, 2 partial failure (some method
failed on some run, or ``compare`` found differences), 3 I/O error.
"""

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

from .experiment import METHODS, ConfigError, config_to_text, load_config, run_experiment, \
    with_overrides

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2
EXIT_IO = 3


def _methods_arg(text):
    methods = [m.strip().lower() for m in text.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if not methods or unknown:
        raise argparse.ArgumentTypeError(
            f"expected a comma-separated subset of {','.join(METHODS)}, got {text!r}")
    return methods


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ramstap", description="Gridless sparse-recovery STAP experiments.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress (-v) or solver details (-vv)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment from a config file")
    run.add_argument("config", help="path to an experiment .cfg file")
    run.add_argument("--runs", type=_positive_int, help="override monte_carlo_runs")
    run.add_argument("--methods", type=_methods_arg,
                     help=f"comma-separated subset of {','.join(METHODS)}")
    run.add_argument("--seed", type=int, help="override base_seed")
    run.add_argument("--out", help="override output_dir")

    compare = sub.add_parser("compare", help="compare the CSV outputs of two runs")
    compare.add_argument("dir_a")
    compare.add_argument("dir_b")
    compare.add_argument("--tol", type=float, default=0.0,
                         help="largest allowed absolute difference per numeric cell")

    show = sub.add_parser("show-config", help="print a config with every default filled in")
    show.add_argument("config")
    return parser


def _cmd_run(args):
    config = with_overrides(load_config(args.config), runs=args.runs, methods=args.methods,
                            seed=args.seed, output_dir=args.out)

    def progress(done, total):
        logging.getLogger("ramstap").info("run %d/%d done", done, total)

    artifacts = run_experiment(config, progress=progress)
    result = artifacts.result
    print(f"wrote {len(artifacts.files)} files and {artifacts.manifest.name} "
          f"to {artifacts.output_dir}")
    for method in config.methods:
        if method in result.loss_db:
            print(f"  {method:8s} mean loss outside notch "
                  f"{result.mean_loss_outside_notch(method):8.3f} dB "
                  f"({result.completed_runs(method)}/{len(result.seeds)} runs)")
        else:
            print(f"  {method:8s} failed on every run")
    if artifacts.failures:
        print(f"{len(artifacts.failures)} method failure(s); see manifest.json", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


def _cells_differ(a, b, tol):
    if a == b:
        return False
    try:
        x, y = float(a), float(b)
    except ValueError:
        return True
    if math.isnan(x) and math.isnan(y):
        return False
    return not abs(x - y) <= tol


def compare_dirs(dir_a, dir_b, tol=0.0):
    """Differences between same-named CSV files of two output directories, as messages."""
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    for d in (dir_a, dir_b):
        if not d.is_dir():
            raise FileNotFoundError(f"not a directory: {d}")
    names_a = {p.name for p in dir_a.glob("*.csv")}
    names_b = {p.name for p in dir_b.glob("*.csv")}
    problems = [f"{name}: only in {dir_a}" for name in sorted(names_a - names_b)]
    problems += [f"{name}: only in {dir_b}" for name in sorted(names_b - names_a)]
    for name in sorted(names_a & names_b):
        rows_a, rows_b = _read_csv(dir_a / name), _read_csv(dir_b / name)
        if len(rows_a) != len(rows_b):
            problems.append(f"{name}: {len(rows_a)} vs {len(rows_b)} rows")
            continue
        for line, (ra, rb) in enumerate(zip(rows_a, rows_b), start=1):
            if len(ra) != len(rb):
                problems.append(f"{name}:{line}: {len(ra)} vs {len(rb)} columns")
                continue
            for col, (a, b) in enumerate(zip(ra, rb), start=1):
                if _cells_differ(a, b, tol):
                    problems.append(f"{name}:{line}:{col}: {a} != {b}")
    return problems


def _cmd_compare(args):
    problems = compare_dirs(args.dir_a, args.dir_b, args.tol)
    for message in problems:
        print(message)
    if problems:
        print(f"{len(problems)} difference(s)", file=sys.stderr)
        return EXIT_PARTIAL
    print("CSV outputs agree")
    return EXIT_OK


def _cmd_show_config(args):
    sys.stdout.write(config_to_text(load_config(args.config)))
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "compare": _cmd_compare, "show-config": _cmd_show_config}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
