"""
Learning-rate selection and seed-averaged result tables.
"""

import csv
import logging
import statistics
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ..errors import EmptyDatasetError, IncompleteRunsError
from .records import CellRun

logger = logging.getLogger(__name__)

METRIC_FIELDS = {"accuracy": "test_accuracy", "f1": "test_macro_f1"}
SUMMARY_FIELDS = ["dataset", "alpha", "metric", "algorithm", "mean", "std", "n_seeds", "lr", "best"]


@dataclass(frozen=True)
class SummaryRow:
    dataset: str
    alpha: float
    metric: str
    algorithm: str
    mean: float
    std: float
    n_seeds: int
    lr: float
    best: bool = False


def final_window_score(run: CellRun, metric: str = "accuracy", window: int = 5) -> float:
    """Mean of ``metric`` over the last ``window`` evaluation points."""
    name = METRIC_FIELDS[metric]
    values = [getattr(r, name) for r in run.records if getattr(r, name) is not None]
    if not values:
        raise EmptyDatasetError(
            f"run {run.key} has no evaluation points",
            {"algorithm": run.algorithm, "lr": run.lr, "seed": run.seed},
        )
    tail = values[-window:]
    return sum(tail) / len(tail)


def _index(runs: Iterable[CellRun]) -> Dict[Tuple[str, float, int], CellRun]:
    return {r.key: r for r in runs}


def _sample_std(values: Sequence[float]) -> float:
    return statistics.stdev(values) if len(values) > 1 else 0.0


def select_best_lr(
    runs: Sequence[CellRun],
    algorithm: str,
    seeds: Sequence[int],
    lr_grid: Optional[Sequence[float]] = None,
    window: int = 5,
) -> float:
    """
    Learning rate with the highest seed-averaged final-window accuracy.

    Every grid lr must have a run (finished or diverged) for every seed.
    Learning rates with a diverged seed are not eligible; exact ties go to
    the smaller lr.

    Args:
        runs: Cells loaded from a run directory
        algorithm: Algorithm name (fedavg, mfl or rmfl)
        seeds: Seeds averaged for each lr
        lr_grid: Candidate learning rates (default: every lr present in ``runs``)
        window: Evaluation points averaged per run

    Returns:
        The selected learning rate

    Raises:
        IncompleteRunsError: Cells are missing, or every lr has a diverged seed
    """
    index = _index(runs)
    if lr_grid is None:
        lr_grid = sorted({r.lr for r in runs if r.algorithm == algorithm})
    if not lr_grid:
        raise IncompleteRunsError(f"no runs for algorithm {algorithm}", {"algorithm": algorithm, "missing": []})

    missing = [
        {"algorithm": algorithm, "lr": lr, "seed": seed}
        for lr in lr_grid
        for seed in seeds
        if (algorithm, lr, seed) not in index
    ]
    if missing:
        raise IncompleteRunsError(
            f"{len(missing)} runs missing for {algorithm}",
            {"algorithm": algorithm, "missing": missing},
        )

    scores: Dict[float, float] = {}
    for lr in lr_grid:
        cells = [index[(algorithm, lr, seed)] for seed in seeds]
        if any(c.diverged for c in cells):
            logger.info("%s lr=%g ineligible: diverged seeds", algorithm, lr)
            continue
        scores[lr] = statistics.fmean(final_window_score(c, "accuracy", window) for c in cells)
    if not scores:
        raise IncompleteRunsError(
            f"every learning rate diverged for {algorithm}",
            {"algorithm": algorithm, "missing": []},
        )

    best = min(scores, key=lambda lr: (-scores[lr], lr))
    logger.info("best lr for %s: %g (accuracy %.4f)", algorithm, best, scores[best])
    return best


def summarize(
    runs: Sequence[CellRun],
    seeds: Sequence[int],
    dataset: str,
    alpha: float,
    best_lrs: Optional[Dict[str, float]] = None,
    window: int = 5,
) -> List[SummaryRow]:
    """
    Seed mean and sample std of the final-window metrics at each algorithm's
    best lr. The highest mean per metric is flagged ``best``.

    Args:
        runs: Cells loaded from a run directory
        seeds: Seeds every reported cell must have
        dataset: Dataset kind, copied into each row
        alpha: Dirichlet concentration, copied into each row
        best_lrs: Learning rate per algorithm (selected with select_best_lr when omitted)
        window: Evaluation points averaged per run

    Returns:
        Rows for accuracy, then macro F1, sorted by algorithm

    Raises:
        IncompleteRunsError: A best-lr cell is missing or diverged for some seed
    """
    index = _index(runs)
    algorithms = sorted({r.algorithm for r in runs})
    if best_lrs is None:
        best_lrs = {alg: select_best_lr(runs, alg, seeds, window=window) for alg in algorithms}

    rows: List[SummaryRow] = []
    for metric in METRIC_FIELDS:
        per_metric = []
        for alg in sorted(best_lrs):
            lr = best_lrs[alg]
            missing = [s for s in seeds if (alg, lr, s) not in index or index[(alg, lr, s)].diverged]
            if missing:
                raise IncompleteRunsError(
                    f"{alg} lr={lr:g} lacks usable runs for seeds {missing}",
                    {"algorithm": alg, "lr": lr, "missing": missing},
                )
            values = [final_window_score(index[(alg, lr, s)], metric, window) for s in seeds]
            per_metric.append(
                SummaryRow(
                    dataset=dataset,
                    alpha=alpha,
                    metric=metric,
                    algorithm=alg,
                    mean=statistics.fmean(values),
                    std=_sample_std(values),
                    n_seeds=len(values),
                    lr=lr,
                )
            )
        top = max(r.mean for r in per_metric)
        rows.extend(
            SummaryRow(**{**r.__dict__, "best": r.mean == top}) for r in per_metric
        )
    return rows


def format_table(rows: Sequence[SummaryRow]) -> str:
    """
    Text table, one line per algorithm, ``mean (std)`` per metric; the best
    algorithm of each metric is marked with ``*``.
    """
    cells: Dict[str, Dict[str, str]] = defaultdict(dict)
    lrs: Dict[str, float] = {}
    for r in rows:
        cells[r.algorithm][r.metric] = f"{r.mean:.3f} ({r.std:.3f}){'*' if r.best else ''}"
        lrs[r.algorithm] = r.lr
    header = f"{'algorithm':<10} {'lr':>8} {'accuracy':>16} {'f1':>16}"
    if rows:
        header = f"{rows[0].dataset} alpha={rows[0].alpha:g} n_seeds={rows[0].n_seeds}\n" + header
    lines = [header, "-" * 53]
    for alg in sorted(cells):
        lines.append(
            f"{alg:<10} {lrs[alg]:>8g} {cells[alg].get('accuracy', ''):>16} {cells[alg].get('f1', ''):>16}"
        )
    return "\n".join(lines)


def write_summary_csv(rows: Sequence[SummaryRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SUMMARY_FIELDS)
        for r in rows:
            writer.writerow([r.dataset, r.alpha, r.metric, r.algorithm, r.mean, r.std, r.n_seeds, r.lr, int(r.best)])
    return path


def accuracy_curves(
    runs: Sequence[CellRun],
    best_lrs: Dict[str, float],
    seeds: Sequence[int],
) -> List[Tuple[str, int, float, float]]:
    """(algorithm, round, mean_acc, std_acc) across seeds at each evaluated round."""
    index = _index(runs)
    out = []
    for alg in sorted(best_lrs):
        by_round: Dict[int, List[float]] = defaultdict(list)
        for seed in seeds:
            cell = index.get((alg, best_lrs[alg], seed))
            if cell is None or cell.diverged:
                continue
            for rec in cell.records:
                if rec.test_accuracy is not None:
                    by_round[rec.round].append(rec.test_accuracy)
        for rnd in sorted(by_round):
            values = by_round[rnd]
            out.append((alg, rnd, statistics.fmean(values), _sample_std(values)))
    return out


def write_curves_csv(
    runs: Sequence[CellRun],
    best_lrs: Dict[str, float],
    seeds: Sequence[int],
    path: Union[str, Path],
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["algorithm", "round", "mean_acc", "std_acc"])
        writer.writerows(accuracy_curves(runs, best_lrs, seeds))
    return path
