"""Sweeps, run directories and result summaries."""

from .diagnostics import DiagnosticsResult, run_diagnostics
from .records import (
    ROUND_CSV_SCHEMA_VERSION,
    ROUND_FIELDS,
    CellRun,
    RoundCsvWriter,
    cell_name,
    load_runs,
    read_manifest,
    read_round_csv,
    write_manifest,
)
from .runner import ExperimentRunner, load_datasets, partition_stats, run_experiment, summarize_run_dir
from .summary import (
    SummaryRow,
    final_window_score,
    format_table,
    select_best_lr,
    summarize,
    write_curves_csv,
    write_summary_csv,
)

__all__ = [
    "CellRun",
    "DiagnosticsResult",
    "ExperimentRunner",
    "ROUND_CSV_SCHEMA_VERSION",
    "ROUND_FIELDS",
    "RoundCsvWriter",
    "SummaryRow",
    "cell_name",
    "final_window_score",
    "format_table",
    "load_datasets",
    "load_runs",
    "partition_stats",
    "read_manifest",
    "read_round_csv",
    "run_diagnostics",
    "run_experiment",
    "select_best_lr",
    "summarize",
    "summarize_run_dir",
    "write_curves_csv",
    "write_manifest",
    "write_summary_csv",
]
