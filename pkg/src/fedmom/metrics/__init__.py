"""Evaluation metrics and gradient-divergence diagnostics."""

from .classification import ConfusionMatrix, macro_f1
from .divergence import (
    DivergenceRecord,
    divergence_records,
    divergence_trend,
    step_divergence,
    summarize_divergence,
    write_divergence_csv,
    write_divergence_summary_csv,
)

__all__ = [
    "ConfusionMatrix",
    "DivergenceRecord",
    "divergence_records",
    "divergence_trend",
    "macro_f1",
    "step_divergence",
    "summarize_divergence",
    "write_divergence_csv",
    "write_divergence_summary_csv",
]
