"""
Performance profiling for simulation runs.

Tracks wall time and resident memory of rounds and cells. Timings never
enter the round CSVs (those must be byte-reproducible); they go to a
per-cell timing sidecar and the end-of-run report.
"""

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List

import psutil


@dataclass
class PerformanceMetrics:
    """Performance metrics for one operation."""
    name: str
    start_time: float = field(default_factory=time.perf_counter)
    duration_ms: float = 0.0
    memory_start_mb: float = 0.0
    memory_end_mb: float = 0.0

    @property
    def memory_delta_mb(self) -> float:
        return self.memory_end_mb - self.memory_start_mb

    def finish(self) -> None:
        self.duration_ms = (time.perf_counter() - self.start_time) * 1000


class PerformanceProfiler:
    """Collects per-operation timing and memory samples."""

    def __init__(self, enable_memory_tracking: bool = True):
        self.enable_memory_tracking = enable_memory_tracking
        self.metrics: Dict[str, List[PerformanceMetrics]] = {}
        self.process = psutil.Process()

    def rss_mb(self) -> float:
        """Current resident set size in MB."""
        return self.process.memory_info().rss / (1024 * 1024)

    def start_operation(self, name: str) -> PerformanceMetrics:
        metrics = PerformanceMetrics(name=name)
        if self.enable_memory_tracking:
            metrics.memory_start_mb = self.rss_mb()
        return metrics

    def finish_operation(self, metrics: PerformanceMetrics) -> None:
        metrics.finish()
        if self.enable_memory_tracking:
            metrics.memory_end_mb = self.rss_mb()
        self.metrics.setdefault(metrics.name, []).append(metrics)

    @contextmanager
    def track(self, name: str) -> Iterator[PerformanceMetrics]:
        metrics = self.start_operation(name)
        try:
            yield metrics
        finally:
            self.finish_operation(metrics)

    def get_stats(self, operation_name: str) -> Dict[str, Any]:
        """Count and duration/memory summary for one operation name."""
        if operation_name not in self.metrics:
            return {}
        metrics_list = self.metrics[operation_name]
        durations = [m.duration_ms for m in metrics_list]
        peak = max(m.memory_end_mb for m in metrics_list)
        deltas = [m.memory_delta_mb for m in metrics_list]
        return {
            "operation": operation_name,
            "count": len(metrics_list),
            "duration_ms": {
                "min": min(durations),
                "max": max(durations),
                "avg": sum(durations) / len(durations),
                "total": sum(durations),
            },
            "peak_rss_mb": peak,
            "memory_delta_mb": {
                "avg": sum(deltas) / len(deltas),
                "max": max(deltas),
            },
        }

    def report(self) -> str:
        lines = ["Performance Report", "=" * 60]
        for operation_name in sorted(self.metrics):
            stats = self.get_stats(operation_name)
            lines.append(f"\n{operation_name}")
            lines.append(f"  Count: {stats['count']}")
            lines.append(
                f"  Duration: {stats['duration_ms']['avg']:.2f}ms "
                f"(min: {stats['duration_ms']['min']:.2f}, "
                f"max: {stats['duration_ms']['max']:.2f}, "
                f"total: {stats['duration_ms']['total'] / 1000:.1f}s)"
            )
            if self.enable_memory_tracking:
                lines.append(
                    f"  Peak RSS: {stats['peak_rss_mb']:.1f}MB "
                    f"(delta avg: {stats['memory_delta_mb']['avg']:+.1f}MB, "
                    f"max: {stats['memory_delta_mb']['max']:+.1f}MB)"
                )
        return "\n".join(lines)
