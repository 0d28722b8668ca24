"""
Gradient-divergence diagnostics across the active clients of a round.

At local step k every active client i has gradient g_i. With g_bar their
mean, a round's record at step k holds

    mean_cosine     = mean_i cos(g_i, g_bar)
    mean_projection = mean_i (g_i . g_bar) / |g_bar|

Falling values along k mean the clients drift apart as local training goes on.
"""

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy import stats

from ..errors import InsufficientStepsError, ZeroMeanGradientError

logger = logging.getLogger(__name__)

Vector = npt.NDArray[np.float64]

MIN_TREND_STEPS = 5
_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class DivergenceRecord:
    round: int
    step: int
    mean_cosine: float
    mean_projection: float
    num_clients: int


def step_divergence(step_grads: Sequence[Vector]) -> Tuple[float, float]:
    """Mean cosine similarity and mean projection length onto the mean gradient."""
    if len(step_grads) < 2:
        raise InsufficientStepsError(
            f"need at least 2 gradients, got {len(step_grads)}", {"num_gradients": len(step_grads)}
        )
    grads = np.stack(step_grads)
    mean = grads.mean(axis=0)
    mean_norm = float(np.linalg.norm(mean))
    norms = np.linalg.norm(grads, axis=1)
    if mean_norm <= _ZERO_TOL * max(float(norms.max()), 1.0):
        raise ZeroMeanGradientError("mean gradient is the zero vector", {"mean_norm": mean_norm})

    projections = grads @ mean / mean_norm
    cosines = np.divide(projections, norms, out=np.zeros_like(projections), where=norms > 0)
    cosines = np.clip(cosines, -1.0, 1.0)
    return float(cosines.mean()), float(projections.mean())


def divergence_records(round_index: int, client_step_grads: Sequence[Sequence[Vector]]) -> List[DivergenceRecord]:
    """
    Records for every local step of a round.

    ``client_step_grads[i][k]`` is client i's gradient at step k. Clients may
    run different numbers of steps; step k uses the clients that reached it.
    Steps with fewer than two clients or a zero mean gradient are skipped.
    """
    records: List[DivergenceRecord] = []
    longest = max((len(g) for g in client_step_grads), default=0)
    for k in range(longest):
        at_k = [g[k] for g in client_step_grads if len(g) > k]
        if len(at_k) < 2:
            continue
        try:
            cosine, projection = step_divergence(at_k)
        except ZeroMeanGradientError:
            logger.warning("round %d step %d: zero mean gradient, record skipped", round_index, k)
            continue
        records.append(DivergenceRecord(round_index, k, cosine, projection, len(at_k)))
    return records


def _spearman(x: Sequence[float], y: Sequence[float]) -> float:
    if np.ptp(np.asarray(y, dtype=np.float64)) == 0 or np.ptp(np.asarray(x, dtype=np.float64)) == 0:
        return 0.0
    rho = stats.spearmanr(x, y).correlation
    return 0.0 if np.isnan(rho) else float(rho)


def divergence_trend(
    records: Sequence[DivergenceRecord],
    field: str = "mean_cosine",
    pooling: str = "by_step",
) -> float:
    """
    Spearman rank correlation between local step and ``field``.

    ``by_step`` averages the field per step over rounds and correlates the
    averages; ``by_round`` correlates within each round and averages the
    coefficients. Negative values mean divergence grows with the local step.
    """
    if field not in ("mean_cosine", "mean_projection"):
        raise ValueError(f"unknown divergence field {field!r}")
    steps = sorted({r.step for r in records})
    if len(steps) < MIN_TREND_STEPS:
        raise InsufficientStepsError(
            f"need records for at least {MIN_TREND_STEPS} local steps, got {len(steps)}",
            {"distinct_steps": len(steps)},
        )

    if pooling == "by_step":
        by_step: Dict[int, List[float]] = defaultdict(list)
        for r in records:
            by_step[r.step].append(getattr(r, field))
        return _spearman(steps, [float(np.mean(by_step[k])) for k in steps])

    if pooling == "by_round":
        by_round: Dict[int, List[DivergenceRecord]] = defaultdict(list)
        for r in records:
            by_round[r.round].append(r)
        coefficients = []
        for rnd in sorted(by_round):
            rows = sorted(by_round[rnd], key=lambda r: r.step)
            if len(rows) >= 2:
                coefficients.append(_spearman([r.step for r in rows], [getattr(r, field) for r in rows]))
        return float(np.mean(coefficients)) if coefficients else 0.0

    raise ValueError(f"unknown pooling {pooling!r}")


def summarize_divergence(records: Sequence[DivergenceRecord]) -> List[Dict[str, float]]:
    """Per-step box-plot statistics pooled over rounds."""
    by_step: Dict[int, List[DivergenceRecord]] = defaultdict(list)
    for r in records:
        by_step[r.step].append(r)
    rows = []
    for k in sorted(by_step):
        row: Dict[str, float] = {"step": k, "count": len(by_step[k])}
        for name in ("mean_cosine", "mean_projection"):
            values = np.array([getattr(r, name) for r in by_step[k]])
            q = np.quantile(values, [0.0, 0.25, 0.5, 0.75, 1.0])
            for label, value in zip(("min", "q1", "median", "q3", "max"), q):
                row[f"{name}_{label}"] = float(value)
        rows.append(row)
    return rows


def write_divergence_csv(records: Sequence[DivergenceRecord], path: Union[str, Path]) -> Path:
    """round, k, mean_cosine, mean_projection, num_clients."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["round", "k", "mean_cosine", "mean_projection", "num_clients"])
        for r in records:
            writer.writerow([r.round, r.step, r.mean_cosine, r.mean_projection, r.num_clients])
    return path


def write_divergence_summary_csv(records: Sequence[DivergenceRecord], path: Union[str, Path]) -> Path:
    rows = summarize_divergence(records)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        if not rows:
            return path
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return path
