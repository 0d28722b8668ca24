"""
Run-directory layout, round CSVs and the manifest.

    <run_dir>/manifest.yaml
    <run_dir>/cells/<algorithm>_lr<lr>_seed<seed>.csv          evaluation rows
    <run_dir>/cells/<algorithm>_lr<lr>_seed<seed>.timing.csv   wall time per round
    <run_dir>/cells/<algorithm>_lr<lr>_seed<seed>.diverged     marker for a failed cell

Round CSVs are written as ``.csv.partial`` and renamed once the cell
finishes, so a file without the suffix is always complete.
"""

import csv
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Tuple, Union

import yaml

from ..__version__ import __version__
from ..config import ExperimentConfig, lr_label
from ..errors import ConfigError, ManifestMismatchError
from ..federated.server import RoundRecord

logger = logging.getLogger(__name__)

ROUND_CSV_SCHEMA_VERSION = 1
ROUND_FIELDS = [
    "round", "algorithm", "lr", "seed",
    "train_loss", "test_accuracy", "test_macro_f1", "clients",
]
TIMING_FIELDS = ["round", "wall_time_ms", "rss_mb"]

MANIFEST_NAME = "manifest.yaml"
CELLS_DIR = "cells"
PARTIAL_SUFFIX = ".partial"
TIMING_SUFFIX = ".timing.csv"
DIVERGED_SUFFIX = ".diverged"

CellKey = Tuple[str, float, int]


def cell_name(algorithm: str, lr: float, seed: int) -> str:
    return f"{algorithm}_lr{lr_label(lr)}_seed{seed}"


def cell_paths(run_dir: Path, key: CellKey) -> Dict[str, Path]:
    base = Path(run_dir) / CELLS_DIR / cell_name(*key)
    return {
        "csv": base.with_name(base.name + ".csv"),
        "partial": base.with_name(base.name + ".csv" + PARTIAL_SUFFIX),
        "timing": base.with_name(base.name + TIMING_SUFFIX),
        "timing_partial": base.with_name(base.name + TIMING_SUFFIX + PARTIAL_SUFFIX),
        "diverged": base.with_name(base.name + DIVERGED_SUFFIX),
    }


def is_cell_done(run_dir: Path, key: CellKey) -> bool:
    paths = cell_paths(run_dir, key)
    return paths["csv"].is_file() or paths["diverged"].is_file()


@dataclass
class CellRun:
    """All evaluation rows of one (algorithm, lr, seed) run."""

    algorithm: str
    lr: float
    seed: int
    records: List[RoundRecord] = field(default_factory=list)
    diverged: bool = False

    @property
    def key(self) -> CellKey:
        return (self.algorithm, self.lr, self.seed)


class _AtomicCsv:
    """Append rows to ``<final>.partial``; rename on :meth:`complete`."""

    def __init__(self, final_path: Path, partial_path: Path, header: List[str]):
        self.final_path = final_path
        self.partial_path = partial_path
        self.partial_path.parent.mkdir(parents=True, exist_ok=True)
        self._file: Optional[TextIO] = open(self.partial_path, "w", newline="")
        self._writer = csv.writer(self._file)
        self._writer.writerow(header)

    def _write(self, row: List[Any]) -> None:
        assert self._file is not None
        self._writer.writerow(row)
        self._file.flush()

    def complete(self) -> Path:
        if self._file is not None:
            self._file.close()
            self._file = None
        os.replace(self.partial_path, self.final_path)
        return self.final_path

    def abort(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None
        self.partial_path.unlink(missing_ok=True)


class RoundCsvWriter(_AtomicCsv):
    def __init__(self, run_dir: Path, key: CellKey):
        paths = cell_paths(run_dir, key)
        super().__init__(paths["csv"], paths["partial"], ROUND_FIELDS)

    def append(self, record: RoundRecord) -> None:
        self._write([
            record.round,
            record.algorithm,
            record.lr,
            record.seed,
            record.train_loss,
            record.test_accuracy,
            record.test_macro_f1,
            " ".join(str(c) for c in record.clients),
        ])


class TimingCsvWriter(_AtomicCsv):
    def __init__(self, run_dir: Path, key: CellKey):
        paths = cell_paths(run_dir, key)
        super().__init__(paths["timing"], paths["timing_partial"], TIMING_FIELDS)

    def append(self, round_index: int, wall_time_ms: int, rss_mb: float) -> None:
        self._write([round_index, wall_time_ms, f"{rss_mb:.1f}"])


def discard_partials(run_dir: Path) -> int:
    """Remove leftovers of interrupted cells; returns how many were removed."""
    removed = 0
    for path in (Path(run_dir) / CELLS_DIR).glob(f"*{PARTIAL_SUFFIX}"):
        path.unlink()
        removed += 1
    return removed


def write_diverged_marker(run_dir: Path, key: CellKey, reason: Dict[str, Any]) -> Path:
    path = cell_paths(run_dir, key)["diverged"]
    path.parent.mkdir(parents=True, exist_ok=True)
    algorithm, lr, seed = key
    with open(path, "w") as f:
        yaml.safe_dump({"algorithm": algorithm, "lr": lr, "seed": seed, "reason": reason}, f, sort_keys=True)
    return path


def read_round_csv(path: Union[str, Path]) -> List[RoundRecord]:
    records = []
    with open(path, "r", newline="") as f:
        for row in csv.DictReader(f):
            records.append(
                RoundRecord(
                    round=int(row["round"]),
                    algorithm=row["algorithm"],
                    lr=float(row["lr"]),
                    seed=int(row["seed"]),
                    train_loss=float(row["train_loss"]),
                    test_accuracy=float(row["test_accuracy"]),
                    test_macro_f1=float(row["test_macro_f1"]),
                    wall_time_ms=0,
                    clients=tuple(int(c) for c in row["clients"].split()),
                )
            )
    return records


def load_runs(run_dir: Union[str, Path]) -> List[CellRun]:
    """Every finished cell in ``run_dir``, sorted by (algorithm, lr, seed)."""
    cells = Path(run_dir) / CELLS_DIR
    runs: List[CellRun] = []
    for path in sorted(cells.glob("*.csv")):
        if path.name.endswith(TIMING_SUFFIX):
            continue
        records = read_round_csv(path)
        if not records:
            logger.warning("ignoring empty round file %s", path)
            continue
        first = records[0]
        runs.append(CellRun(first.algorithm, first.lr, first.seed, records))
    for path in sorted(cells.glob(f"*{DIVERGED_SUFFIX}")):
        with open(path, "r") as f:
            marker = yaml.safe_load(f)
        runs.append(CellRun(marker["algorithm"], float(marker["lr"]), int(marker["seed"]), diverged=True))
    runs.sort(key=lambda r: r.key)
    return runs


def write_manifest(run_dir: Path, cfg: ExperimentConfig) -> Path:
    """
    Record the resolved config; refuse a directory that holds another config.
    """
    path = Path(run_dir) / MANIFEST_NAME
    digest = cfg.config_hash()
    if path.is_file():
        existing = read_manifest(run_dir)
        if existing.get("config_hash") != digest:
            raise ManifestMismatchError(
                f"{run_dir} already holds results for a different configuration",
                {"run_dir": str(run_dir), "existing_hash": existing.get("config_hash"), "new_hash": digest},
            )
        return path
    manifest = {
        "schema_version": ROUND_CSV_SCHEMA_VERSION,
        "fedmom_version": __version__,
        "config_hash": digest,
        "config": cfg.model_dump(mode="json"),
    }
    with open(path, "w") as f:
        yaml.safe_dump(manifest, f, sort_keys=True)
    return path


def read_manifest(run_dir: Union[str, Path]) -> Dict[str, Any]:
    path = Path(run_dir) / MANIFEST_NAME
    if not path.is_file():
        raise ConfigError(f"no {MANIFEST_NAME} in {run_dir}", {"run_dir": str(run_dir)})
    with open(path, "r") as f:
        return yaml.safe_load(f)
