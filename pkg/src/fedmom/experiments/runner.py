"""
Experiment orchestration: the (algorithm, lr, seed) sweep behind ``fedmom run``.
"""

import logging
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..config import ExperimentConfig
from ..data.dataset import Dataset
from ..data.mnist import load_mnist_split, split_paths
from ..data.partition import ClientShard, mean_class_entropy, partition_dirichlet, write_partition_csv
from ..data.synthetic import make_synthetic
from ..errors import ClientTrainingError, OutputDirError
from ..federated.config import Algorithm
from ..federated.simulation import FederatedSimulation
from ..performance import PerformanceProfiler
from .records import (
    CellKey,
    RoundCsvWriter,
    TimingCsvWriter,
    discard_partials,
    is_cell_done,
    load_runs,
    read_manifest,
    write_diverged_marker,
    write_manifest,
)
from .summary import SummaryRow, format_table, select_best_lr, summarize, write_curves_csv, write_summary_csv

logger = logging.getLogger(__name__)


def check_dataset(cfg: ExperimentConfig) -> None:
    """Fail before training when dataset files are missing."""
    if cfg.dataset.kind == "mnist":
        split_paths(cfg.dataset.data_dir, "train")
        split_paths(cfg.dataset.data_dir, "test")


def load_datasets(cfg: ExperimentConfig) -> Tuple[Dataset, Dataset]:
    """(train, test) for the configured dataset."""
    d = cfg.dataset
    if d.kind == "mnist":
        return load_mnist_split(d.data_dir, "train"), load_mnist_split(d.data_dir, "test")
    train = make_synthetic(d.num_classes, d.dim, d.per_class, d.class_separation, d.seed)
    test = make_synthetic(d.num_classes, d.dim, d.test_per_class, d.class_separation, d.seed + 1)
    return train, test


def prepare_output_dir(path: Union[str, Path]) -> Path:
    run_dir = Path(path)
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=run_dir, prefix=".write-check-"):
            pass
    except OSError as exc:
        raise OutputDirError(
            f"output directory {run_dir} is not writable: {exc}",
            {"output_dir": str(run_dir)},
        ) from exc
    return run_dir


class ExperimentRunner:
    """
    Runs every missing cell of a sweep into ``cfg.output_dir``.

    Finished cells (round CSV or diverged marker present) are skipped, so an
    interrupted sweep resumes where it stopped.
    """

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.run_dir = Path(cfg.output_dir)
        self.profiler = PerformanceProfiler()
        self._datasets: Optional[Tuple[Dataset, Dataset]] = None
        self._partitions: Dict[int, List[ClientShard]] = {}

    def cells(self) -> List[CellKey]:
        return [
            (alg.value, lr, seed)
            for alg in self.cfg.algorithms
            for lr in self.cfg.lr_grid
            for seed in self.cfg.seeds
        ]

    def datasets(self) -> Tuple[Dataset, Dataset]:
        if self._datasets is None:
            self._datasets = load_datasets(self.cfg)
            train, test = self._datasets
            logger.info("loaded %s: %d train / %d test samples", self.cfg.dataset.kind, len(train), len(test))
        return self._datasets

    def shards(self, seed: int) -> List[ClientShard]:
        pcfg = self.cfg.partition_config(seed)
        if pcfg.seed not in self._partitions:
            train, _ = self.datasets()
            self._partitions[pcfg.seed] = partition_dirichlet(train, pcfg)
        return self._partitions[pcfg.seed]

    def run(self) -> Path:
        check_dataset(self.cfg)
        prepare_output_dir(self.run_dir)
        write_manifest(self.run_dir, self.cfg)
        stale = discard_partials(self.run_dir)
        if stale:
            logger.warning("discarded %d partial files from an interrupted run", stale)

        pending = [key for key in self.cells() if not is_cell_done(self.run_dir, key)]
        total = len(self.cells())
        logger.info(
            "experiment %s: %d cells, %d already done",
            self.cfg.name, total, total - len(pending),
        )
        for i, key in enumerate(pending, 1):
            logger.info("cell %d/%d: %s lr=%g seed=%d", i, len(pending), *key)
            with self.profiler.track("cell"):
                self.run_cell(key)
        if pending:
            logger.info("\n%s", self.profiler.report())
        return self.run_dir

    def run_cell(self, key: CellKey) -> bool:
        """Train one cell; returns False when it diverged."""
        algorithm, lr, seed = key
        train, test = self.datasets()
        arch = self.cfg.architecture(train.dim, train.num_classes)
        fed_cfg = self.cfg.federation_config(Algorithm(algorithm), lr, seed)
        sim = FederatedSimulation(
            arch, train, self.shards(seed), fed_cfg,
            test_set=test, eval_every=self.cfg.eval_every, threads=self.cfg.threads,
        )

        rounds = RoundCsvWriter(self.run_dir, key)
        timing = TimingCsvWriter(self.run_dir, key)
        try:
            for _, record in sim.run():
                timing.append(record.round, record.wall_time_ms, self.profiler.rss_mb())
                if record.evaluated:
                    rounds.append(record)
                    logger.debug(
                        "%s lr=%g seed=%d round %d: acc=%.4f f1=%.4f",
                        algorithm, lr, seed, record.round, record.test_accuracy, record.test_macro_f1,
                    )
        except ClientTrainingError as exc:
            rounds.abort()
            timing.abort()
            write_diverged_marker(self.run_dir, key, exc.to_dict())
            logger.warning("%s lr=%g seed=%d diverged: %s", algorithm, lr, seed, exc.message)
            return False
        except BaseException:
            rounds.abort()
            timing.abort()
            raise
        rounds.complete()
        timing.complete()
        return True


def run_experiment(cfg: ExperimentConfig) -> Path:
    """
    Run (or resume) the sweep described by ``cfg``.

    Finished cells are skipped, leftover ``.partial`` files are discarded
    and a cell whose training diverges is marked instead of aborting the
    sweep.

    Args:
        cfg: Validated experiment configuration

    Returns:
        The run directory (``cfg.output_dir``)

    Raises:
        DatasetNotFoundError: MNIST files are missing, before any training
        OutputDirError: The output directory cannot be written
        ManifestMismatchError: The directory holds a run of another config
    """
    return ExperimentRunner(cfg).run()


def summarize_run_dir(run_dir: Union[str, Path], window: Optional[int] = None) -> Tuple[List[SummaryRow], str]:
    """
    Select best lrs and summarize a finished run directory.

    Writes ``summary.csv``, ``curves.csv`` and ``table.txt`` next to the
    manifest and returns the rows with the formatted table.
    """
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    cfg = ExperimentConfig.model_validate(manifest["config"])
    window = window or cfg.final_window
    runs = load_runs(run_dir)

    best_lrs = {
        alg.value: select_best_lr(runs, alg.value, cfg.seeds, cfg.lr_grid, window)
        for alg in cfg.algorithms
    }
    rows = summarize(runs, cfg.seeds, cfg.dataset.kind, cfg.partition.alpha, best_lrs, window)
    table = format_table(rows)

    write_summary_csv(rows, run_dir / "summary.csv")
    write_curves_csv(runs, best_lrs, cfg.seeds, run_dir / "curves.csv")
    (run_dir / "table.txt").write_text(table + "\n")
    return rows, table


def partition_stats(cfg: ExperimentConfig, output: Union[str, Path], seed: Optional[int] = None) -> float:
    """Partition the training set, write per-client class counts; returns mean class entropy."""
    check_dataset(cfg)
    train, _ = load_datasets(cfg)
    pcfg = cfg.partition_config(cfg.seeds[0] if seed is None else seed)
    shards = partition_dirichlet(train, pcfg)
    write_partition_csv(shards, output)
    entropy = mean_class_entropy(shards)
    logger.info(
        "%d clients, alpha=%g, seed=%d: mean class entropy %.4f nats",
        pcfg.num_clients, pcfg.alpha, pcfg.seed, entropy,
    )
    return entropy


__all__ = [
    "ExperimentRunner",
    "check_dataset",
    "load_datasets",
    "partition_stats",
    "prepare_output_dir",
    "run_experiment",
    "summarize_run_dir",
]
