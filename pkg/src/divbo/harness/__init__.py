"""Datasets, experiments, statistics and the command-line interface."""

from .data import (
    BUNDLED,
    Dataset,
    DatasetProblem,
    fetch_openml,
    ingest_csv,
    stratified_split,
    write_bundled_csv,
)
from .experiments import (
    aggregate,
    build_report,
    emit_report,
    iteration_ranks,
    load_runs,
    make_problem,
    run_experiment,
    run_row,
    surrogate_eval_experiment,
    write_run_dir,
)
from .stats import WilcoxonResult, kendall_tau, wilcoxon_signed_rank

__all__ = [
    "BUNDLED",
    "Dataset",
    "DatasetProblem",
    "WilcoxonResult",
    "aggregate",
    "build_report",
    "emit_report",
    "fetch_openml",
    "ingest_csv",
    "iteration_ranks",
    "kendall_tau",
    "load_runs",
    "make_problem",
    "run_experiment",
    "run_row",
    "stratified_split",
    "surrogate_eval_experiment",
    "wilcoxon_signed_rank",
    "write_bundled_csv",
    "write_run_dir",
]
