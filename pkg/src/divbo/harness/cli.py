"""Command-line entry point: ``divbo {run,bench,surrogate-eval,fetch-openml,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import DatasetError, ValidationError
from ..optimizer import METHODS, DivBOConfig, run
from .data import fetch_openml
from .experiments import (
    CHECKPOINTS,
    build_report,
    emit_report,
    load_runs,
    make_problem,
    run_experiment,
    surrogate_eval_experiment,
    write_run_dir,
)

log = logging.getLogger("divbo")


def parse_seeds(text: str) -> list[int]:
    """``"3"`` -> [3]; ``"0-4"`` -> [0..4]; ``"1,5,7"`` -> [1, 5, 7]."""
    seeds: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError(f"no seeds in {text!r}")
    return seeds


def _split(values) -> list[str]:
    out = []
    for v in values or []:
        out.extend(x for x in v.split(",") if x)
    return out


def _optimizer_config(args, seed: int) -> DivBOConfig:
    overrides = {"seed": seed}
    for key in ("budget", "beta", "tau", "ensemble_size", "time_limit"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.profile == "desk":
        return DivBOConfig.desk(**overrides)
    return DivBOConfig(**overrides)


def _common(p: argparse.ArgumentParser, budget_default=None) -> None:
    p.add_argument("--target-col", default="class", help="target column of a CSV dataset")
    p.add_argument("--budget", type=int, default=budget_default, help="evaluations per run")
    p.add_argument("--beta", type=float, default=None, help="diversity weight scale")
    p.add_argument("--tau", type=float, default=None, help="diversity weight growth rate")
    p.add_argument("--ensemble-size", type=int, default=None, help="ensemble selection rounds")
    p.add_argument("--time-limit", type=float, default=None, help="seconds per run")
    p.add_argument(
        "--profile", choices=("full", "desk"), default="full",
        help="surrogate settings: full defaults or the lighter single-core profile",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divbo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one optimisation run into a run directory")
    p.add_argument("--dataset", required=True, help="CSV path, bundled:<name> or synthetic[:k]")
    p.add_argument("--method", choices=METHODS, default="DivBO")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="run directory")
    _common(p)

    p = sub.add_parser("bench", help="cross product of datasets, methods and seeds")
    p.add_argument("--dataset", action="append", required=True, help="repeatable or comma separated")
    p.add_argument("--method", action="append", help="repeatable or comma separated (default: all)")
    p.add_argument("--seed", type=parse_seeds, default=[0], help="e.g. 0-9 or 0,3,5")
    p.add_argument("--baseline", default=None, help="method compared against the others")
    p.add_argument("--out", required=True, help="bench directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    _common(p)

    p = sub.add_parser("surrogate-eval", help="held-out Kendall tau of both surrogates")
    p.add_argument("--dataset", default="synthetic")
    p.add_argument("--seed", type=parse_seeds, default=[0])
    p.add_argument("--n-configs", type=int, default=300)
    p.add_argument("--n-test", type=int, default=50)
    p.add_argument("--checkpoints", default=",".join(map(str, CHECKPOINTS)))
    p.add_argument("--out", required=True, help="output JSON file")
    p.add_argument("--target-col", default="class")
    p.add_argument("--profile", choices=("full", "desk"), default="full")

    p = sub.add_parser("fetch-openml", help="download an OpenML dataset as CSV")
    p.add_argument("--id", type=int, required=True, dest="dataset_id")
    p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("report", help="recompute report files from a bench directory")
    p.add_argument("--out", required=True, help="bench directory containing runs/")
    p.add_argument("--method", action="append", help="method order (default: as found)")
    p.add_argument("--baseline", default=None)
    p.add_argument("--format", choices=("json", "csv", "both"), default="both")
    return parser


def cmd_run(args) -> int:
    problem = make_problem(args.dataset, args.target_col, args.seed)
    cfg = _optimizer_config(args, args.seed)
    result = run(args.method, problem, cfg)
    out = write_run_dir(result, args.out, problem)
    summary = result.summary()
    print(json.dumps({k: summary[k] for k in ("method", "status", "val_error", "test_error")}))
    log.info("wrote %s", out)
    return 0


def cmd_bench(args) -> int:
    methods = _split(args.method) or list(METHODS)
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}")
    cfg = _optimizer_config(args, 0)
    report = run_experiment(
        _split(args.dataset), methods, args.seed, cfg, out=args.out, jobs=args.jobs,
        target_col=args.target_col, baseline=args.baseline,
        progress=lambda row: log.info("%s %s seed %s: %s", row["dataset"], row["method"],
                                      row["seed"], row.get("status")),
    )
    for path in emit_report(report, args.out):
        print(path)
    failed = sum(r.get("status") == "failed" for r in report["runs"])
    return 1 if failed else 0


def cmd_surrogate_eval(args) -> int:
    checkpoints = [int(k) for k in args.checkpoints.split(",") if k]
    cfg = DivBOConfig.desk() if args.profile == "desk" else DivBOConfig()
    curves = []
    for seed in args.seed:
        problem = make_problem(args.dataset, args.target_col, seed)
        curves.append(surrogate_eval_experiment(
            problem, args.n_configs, args.n_test, checkpoints, seed, cfg))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"dataset": args.dataset, "runs": curves}, indent=1))
    for c in curves:
        for point in c["curve"]:
            print(c["seed"], point["k"], point["diversity_tau"], point["performance_tau"])
    return 0


def cmd_fetch(args) -> int:
    print(fetch_openml(args.dataset_id, args.out))
    return 0


def cmd_report(args) -> int:
    rows = load_runs(args.out)
    if not rows:
        raise ValidationError(f"no run directories under {args.out}/runs")
    methods = _split(args.method) or sorted({r["method"] for r in rows}, key=METHODS.index)
    report = build_report(rows, methods, args.baseline)
    formats = ("json", "csv") if args.format == "both" else (args.format,)
    for path in emit_report(report, args.out, formats):
        print(path)
    return 0


COMMANDS = {
    "run": cmd_run,
    "bench": cmd_bench,
    "surrogate-eval": cmd_surrogate_eval,
    "fetch-openml": cmd_fetch,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
