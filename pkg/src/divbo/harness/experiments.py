"""Experiment orchestration: run directories, benches, surrogate evaluation, reports.

A run directory holds::

    history.jsonl      one JSON record per iteration (no timings, so reruns are identical)
    preds/<idx>.f32    validation prediction matrix of observation idx, with <idx>.json sidecar
    result.json        method, final pool and errors, plus summary diagnostics
    config.json        optimizer settings, problem descriptor, method and seed

A bench directory holds ``runs/<dataset>/<method>/seed<k>/`` run directories
and the report files ``report.json``, ``ranks.csv`` and ``traces.csv``.
Reports are computed only from what the run directories store, so
``aggregate(report["runs"])`` reproduces every aggregate.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from ..configspace import sample_uniform
from ..ensembles import save_prediction_matrix
from ..history import RunHistory
from ..optimizer import ENSEMBLE_METHODS, DivBOConfig, RunResult, effective_pool_updates, run
from ..surrogates import expected_improvement, fit_div, fit_perf
from ..synthetic import SyntheticProblem
from .data import DatasetProblem, ingest_csv, write_bundled_csv
from .stats import kendall_tau, wilcoxon_signed_rank

log = logging.getLogger(__name__)

CHECKPOINTS = (50, 100, 150, 200, 250)


# ------------------------------------------------------------------ problems


def make_problem(dataset: str, target_col: str = "class", seed: int = 0, cache_dir=None):
    """Build a problem from a dataset string.

    ``synthetic`` or ``synthetic:<k>`` gives :class:`SyntheticProblem` with
    problem seed ``k`` (default: the run seed); ``bundled:<name>`` uses one of
    scikit-learn's bundled datasets; anything else is a CSV path.  The split
    seed is always 0 so every run of a bench sees the same split.
    """
    if dataset == "synthetic" or dataset.startswith("synthetic:"):
        _, _, k = dataset.partition(":")
        return SyntheticProblem(seed=int(k) if k else seed)
    if dataset.startswith("bundled:"):
        name = dataset.split(":", 1)[1]
        cache = Path(cache_dir or os.environ.get("DIVBO_CACHE", Path.home() / ".cache" / "divbo"))
        path = cache / f"{name}.csv"
        if not path.is_file():
            write_bundled_csv(name, path)
        return DatasetProblem(ingest_csv(path, "class", seed=0, name=name))
    return DatasetProblem(ingest_csv(dataset, target_col, seed=0))


def dataset_label(dataset: str) -> str:
    if dataset.startswith("bundled:"):
        return dataset.split(":", 1)[1]
    if dataset.startswith("synthetic"):
        return dataset.replace(":", "")
    return Path(dataset).stem


# ------------------------------------------------------------- run directory


def _describe(problem) -> dict:
    return problem.describe() if hasattr(problem, "describe") else {"kind": type(problem).__name__}


def write_run_dir(result: RunResult, out, problem=None) -> Path:
    """Persist a finished run; see the module docstring for the layout."""
    out = Path(out)
    (out / "preds").mkdir(parents=True, exist_ok=True)
    with open(out / "history.jsonl", "w") as fh:
        for rec in result.trace:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    for idx in range(len(result.history)):
        save_prediction_matrix(out / "preds", idx, result.history[idx].predictions)
    summary = result.summary()
    summary.pop("elapsed", None)
    summary["effective_updates"] = effective_pool_updates(result.trace, len(result.trace) // 3)
    (out / "result.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    config = {
        "method": result.method,
        "seed": result.config.seed,
        "optimizer": result.config.to_dict(),
        "problem": _describe(problem) if problem is not None else None,
    }
    (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True))
    return out


def read_history(run_dir) -> list[dict]:
    with open(Path(run_dir) / "history.jsonl") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def error_curve(trace: list[dict], final_val_error: float, method: str) -> list[float]:
    """Per-iteration validation error of what the method would return at that point.

    Ensemble methods use the temporary pool built after the iteration (which
    is the pool recorded by the next iteration, or the final ensemble);
    single-learner methods use the best error so far.
    """
    if method not in ENSEMBLE_METHODS:
        return [float(r["best_val_error"]) for r in trace]
    curve = [trace[i + 1]["ensemble_val_error"] for i in range(len(trace) - 1)]
    curve.append(final_val_error)
    return [float(v) for v in curve]


def run_row(run_dir) -> dict:
    """Raw per-run row read back from a run directory."""
    run_dir = Path(run_dir)
    trace = read_history(run_dir)
    result = json.loads((run_dir / "result.json").read_text())
    config = json.loads((run_dir / "config.json").read_text())
    method = result["method"]
    return {
        "method": method,
        "seed": config["seed"],
        "status": result["status"],
        "val_error": result["val_error"],
        "test_error": result["test_error"],
        "avg_member_error": result["avg_member_error"],
        "pairwise_disagreement": result["pairwise_disagreement"],
        "effective_updates": result["effective_updates"],
        "error_curve": error_curve(trace, result["val_error"], method),
        "best_val_curve": [float(r["best_val_error"]) for r in trace],
        "min_diversity": [r["min_diversity"] for r in trace],
    }


# ----------------------------------------------------------------- benching


@dataclass(frozen=True)
class Cell:
    dataset: str
    method: str
    seed: int
    target_col: str = "class"


def _run_cell(cell: Cell, cfg: DivBOConfig, out: str | None) -> dict:
    base = {"dataset": dataset_label(cell.dataset), "method": cell.method, "seed": cell.seed}
    try:
        problem = make_problem(cell.dataset, cell.target_col, cell.seed)
        cfg = DivBOConfig.from_dict({**cfg.to_dict(), "seed": cell.seed})
        result = run(cell.method, problem, cfg)
        if out is None:
            import tempfile

            with tempfile.TemporaryDirectory() as tmp:
                return {**base, **run_row(write_run_dir(result, tmp, problem))}
        run_dir = Path(out) / "runs" / base["dataset"] / cell.method / f"seed{cell.seed}"
        return {**base, **run_row(write_run_dir(result, run_dir, problem))}
    except Exception as exc:  # recorded per cell; the bench continues
        log.error("cell %s failed: %s", cell, exc)
        return {**base, "status": "failed", "error": f"{type(exc).__name__}: {exc}",
                "traceback": traceback.format_exc()}


def run_experiment(
    datasets,
    methods,
    seeds,
    cfg: DivBOConfig = DivBOConfig(),
    out=None,
    jobs: int = 1,
    target_col: str = "class",
    baseline: str | None = None,
    progress: Callable | None = None,
) -> dict:
    """Run the (dataset, method, seed) cross product and aggregate a report.

    With ``out`` set, every cell writes its own run directory under
    ``out/runs``.  Failed cells appear in ``report["runs"]`` with status
    ``"failed"`` and are left out of the aggregates.
    """
    if not datasets or not methods or not seeds:
        raise ValueError("need at least one dataset, method and seed")
    cells = [Cell(d, m, int(s), target_col) for d in datasets for m in methods for s in seeds]
    out_s = str(out) if out is not None else None
    rows = []
    if jobs <= 1:
        for cell in cells:
            rows.append(_run_cell(cell, cfg, out_s))
            if progress:
                progress(rows[-1])
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for row in pool.map(_run_cell, cells, [cfg] * len(cells), [out_s] * len(cells)):
                rows.append(row)
                if progress:
                    progress(row)
    return build_report(rows, list(methods), baseline)


def load_runs(bench_dir) -> list[dict]:
    """Rows for every run directory found under ``bench_dir/runs``."""
    rows = []
    for result in sorted(Path(bench_dir).glob("runs/*/*/seed*/result.json")):
        run_dir = result.parent
        rows.append({"dataset": run_dir.parent.parent.name, **run_row(run_dir)})
    return rows


# -------------------------------------------------------------- aggregation


def _mean_std(values) -> dict:
    v = np.asarray([x for x in values if x is not None], dtype=np.float64)
    if v.size == 0:
        return {"mean": None, "std": None, "n": 0}
    return {"mean": float(v.mean()), "std": float(v.std()), "n": int(v.size)}


def _nanmean_columns(curves) -> list[float | None]:
    length = max(len(c) for c in curves)
    out = []
    for t in range(length):
        vals = [c[t] for c in curves if t < len(c) and c[t] is not None]
        out.append(float(np.mean(vals)) if vals else None)
    return out


def iteration_ranks(rows: list[dict], methods: list[str]) -> dict[str, list[float]]:
    """Mean rank per method and iteration for one dataset.

    At each (seed, iteration) the methods present are ranked by their curve
    value (1 = lowest error, ties averaged); ranks are then averaged over seeds.
    """
    by_seed: dict[int, dict[str, list[float]]] = {}
    for r in rows:
        by_seed.setdefault(r["seed"], {})[r["method"]] = r["error_curve"]
    sums = {m: [] for m in methods}
    for curves in by_seed.values():
        if set(curves) != set(methods):
            continue
        length = min(len(c) for c in curves.values())
        mat = np.array([curves[m][:length] for m in methods])
        ranks = np.apply_along_axis(rankdata, 0, mat) if length else mat
        for k, m in enumerate(methods):
            sums[m].append(ranks[k])
    out = {}
    for m in methods:
        if not sums[m]:
            out[m] = []
            continue
        length = min(len(x) for x in sums[m])
        out[m] = np.mean([x[:length] for x in sums[m]], axis=0).tolist()
    return out


def aggregate(runs: list[dict], methods: list[str], baseline: str | None = None) -> dict:
    """All report aggregates, computed from raw per-run rows only."""
    ok = [r for r in runs if r.get("status") != "failed"]
    datasets = sorted({r["dataset"] for r in runs})
    per_dataset = {}
    for d in datasets:
        rows_d = [r for r in ok if r["dataset"] == d]
        present = [m for m in methods if any(r["method"] == m for r in rows_d)]
        cells = {}
        for m in present:
            rm = sorted((r for r in rows_d if r["method"] == m), key=lambda r: r["seed"])
            md = [
                float(np.median([v for v in r["min_diversity"] if v is not None]))
                for r in rm
                if any(v is not None for v in r["min_diversity"])
            ]
            cells[m] = {
                "seeds": [r["seed"] for r in rm],
                "val_error": _mean_std(r["val_error"] for r in rm),
                "test_error": _mean_std(r["test_error"] for r in rm),
                "avg_member_error": _mean_std(r["avg_member_error"] for r in rm),
                "pairwise_disagreement": _mean_std(r["pairwise_disagreement"] for r in rm),
                "effective_updates": _mean_std(r["effective_updates"] for r in rm),
                "median_min_diversity": _mean_std(md),
                "mean_error_curve": _nanmean_columns([r["error_curve"] for r in rm]),
                "mean_min_diversity_curve": _nanmean_columns([r["min_diversity"] for r in rm]),
            }
        ranks = iteration_ranks(rows_d, present)
        missing = [
            {"method": r["method"], "seed": r["seed"]}
            for r in runs
            if r["dataset"] == d and r.get("status") == "failed"
        ]
        per_dataset[d] = {"methods": cells, "ranks": ranks, "missing": missing}

    comparisons = {}
    if baseline is not None:
        for m in methods:
            if m == baseline:
                continue
            tally = {"better": 0, "same": 0, "worse": 0, "insufficient data": 0}
            verdicts = {}
            for d in datasets:
                rows_d = [r for r in ok if r["dataset"] == d]
                a = {r["seed"]: r["test_error"] for r in rows_d if r["method"] == baseline}
                b = {r["seed"]: r["test_error"] for r in rows_d if r["method"] == m}
                common = sorted(s for s in set(a) & set(b) if a[s] is not None and b[s] is not None)
                res = wilcoxon_signed_rank([a[s] for s in common], [b[s] for s in common])
                verdicts[d] = res.to_dict()
                tally[res.verdict] += 1
            comparisons[m] = {"per_dataset": verdicts, "counts": tally}
    return {"datasets": per_dataset, "baseline": baseline, "comparisons": comparisons}


def build_report(runs: list[dict], methods: list[str], baseline: str | None = None) -> dict:
    runs = [{k: v for k, v in r.items() if k != "traceback"} for r in runs]
    return {"methods": list(methods), "runs": runs, "aggregates": aggregate(runs, methods, baseline)}


def emit_report(report: dict, out, formats=("json", "csv")) -> list[Path]:
    """Write ``report.json`` and/or ``ranks.csv`` plus ``traces.csv`` into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out / "report.json"
        tmp = path.with_suffix(".json.part")
        tmp.write_text(json.dumps(report, indent=1, sort_keys=True))
        os.replace(tmp, path)
        written.append(path)
    if "csv" in formats:
        agg = report["aggregates"]["datasets"]
        path = out / "ranks.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dataset", "method", "final_mean_rank", "mean_rank_over_iterations"])
            for d, block in agg.items():
                for m, curve in block["ranks"].items():
                    if curve:
                        w.writerow([d, m, repr(curve[-1]), repr(float(np.mean(curve)))])
        written.append(path)
        path = out / "traces.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dataset", "method", "iteration", "mean_rank", "mean_error", "mean_min_diversity"])
            for d, block in agg.items():
                for m, cell in block["methods"].items():
                    ranks = block["ranks"].get(m, [])
                    for t, err in enumerate(cell["mean_error_curve"]):
                        div = cell["mean_min_diversity_curve"][t]
                        w.writerow([
                            d, m, t,
                            "" if t >= len(ranks) else repr(ranks[t]),
                            "" if err is None else repr(err),
                            "" if div is None else repr(div),
                        ])
        written.append(path)
    return written


# ------------------------------------------------------- surrogate quality


def surrogate_eval_experiment(
    problem,
    n_configs: int = 300,
    n_test: int = 50,
    checkpoints=CHECKPOINTS,
    seed: int = 0,
    cfg: DivBOConfig = DivBOConfig(),
) -> dict:
    """Kendall tau of both surrogates on held-out configurations.

    ``n_configs`` uniform configurations are evaluated; the last ``n_test``
    are held out.  At checkpoint ``k`` the surrogates are fitted on the first
    ``k``.  Diversity tau compares predicted and true diversity over every
    (held-out, fitted) pair; performance tau compares predicted mean error
    and true error over the held-out configurations.
    """
    checkpoints = sorted(int(k) for k in checkpoints)
    if n_test < 2:
        raise ValueError("need at least 2 held-out configurations")
    if not checkpoints or checkpoints[0] < 2 or checkpoints[-1] > n_configs - n_test:
        raise ValueError(f"checkpoints must lie in [2, {n_configs - n_test}]")
    space = problem.space
    configs = sample_uniform(space, n_configs, seed)
    history = RunHistory(space, problem.n_classes)
    for c in configs:
        ev = problem.evaluate(c, seed=seed)
        history.add(c, ev.error, ev.predictions, status=getattr(ev, "status", "ok"))
    D = history.diversity_matrix()
    enc = history.encodings
    errors = history.errors
    test = np.arange(n_configs - n_test, n_configs)
    curve = []
    for k in checkpoints:
        sub = RunHistory(space, problem.n_classes)
        for i in range(k):
            o = history[i]
            sub.add(o.config, o.error, o.predictions, status=o.status)
        ss = np.random.SeedSequence([seed, k]).generate_state(2)
        div = fit_div(sub, cfg.boosting, int(ss[0]))
        mean, _ = div.predict_cross(enc[test], enc[:k])
        truth = D[np.repeat(test, k), np.tile(np.arange(k), n_test)]
        perf = fit_perf(sub, cfg.forest, int(ss[1]))
        mu, _ = perf.predict(enc[test])
        curve.append({
            "k": k,
            "diversity_tau": kendall_tau(mean, truth),
            "performance_tau": kendall_tau(mu, errors[test]),
            "ei_tau": kendall_tau(-expected_improvement(perf, enc[test]), errors[test]),
        })
    return {"seed": seed, "n_configs": n_configs, "n_test": n_test, "curve": curve}
