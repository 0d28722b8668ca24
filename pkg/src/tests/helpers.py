"""
Small builders shared by the test modules.
"""

import gzip
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np

from fedmom.config import ExperimentConfig, parse_config
from fedmom.data.dataset import Dataset
from fedmom.data.mnist import IMAGES_MAGIC, LABELS_MAGIC
from fedmom.data.synthetic import make_synthetic
from fedmom.experiments.records import CellRun
from fedmom.federated.server import RoundRecord


def tiny_dataset(num_classes: int = 3, dim: int = 4, per_class: int = 20, seed: int = 0) -> Dataset:
    return make_synthetic(num_classes, dim, per_class, class_separation=3.0, seed=seed)


def write_idx_images(path: Path, images: np.ndarray, magic: int = IMAGES_MAGIC, compress: bool = False) -> Path:
    count, rows, cols = images.shape
    payload = struct.pack(">IIII", magic, count, rows, cols) + images.astype(np.uint8).tobytes()
    opener = gzip.open if compress else open
    with opener(path, "wb") as f:
        f.write(payload)
    return path


def write_idx_labels(path: Path, labels: Sequence[int], magic: int = LABELS_MAGIC, compress: bool = False) -> Path:
    payload = struct.pack(">II", magic, len(labels)) + bytes(labels)
    opener = gzip.open if compress else open
    with opener(path, "wb") as f:
        f.write(payload)
    return path


def tiny_experiment(output_dir: str, **overrides: Any) -> ExperimentConfig:
    """A synthetic sweep that finishes in well under a second per cell."""
    raw: Dict[str, Any] = {
        "name": "tiny",
        "dataset": {"kind": "synthetic", "num_classes": 3, "dim": 4, "per_class": 20, "test_per_class": 10},
        "model": {"hidden_dim": 8},
        "partition": {"num_clients": 4, "alpha": 0.5},
        "federation": {"clients_per_round": 2, "local_epochs": 1, "batch_size": 5, "rounds": 4},
        "algorithms": ["mfl", "rmfl"],
        "lr_grid": [0.1, 0.03],
        "seeds": [0, 1],
        "eval_every": 2,
        "final_window": 2,
        "output_dir": output_dir,
        "logging": {"level": "WARNING", "console": False},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(raw.get(key), dict):
            raw[key] = {**raw[key], **value}
        else:
            raw[key] = value
    return parse_config(raw)


def make_run(algorithm: str, lr: float, seed: int, accuracies: Sequence[float], f1: Optional[Sequence[float]] = None) -> CellRun:
    f1 = list(accuracies) if f1 is None else list(f1)
    records = [
        RoundRecord(
            round=2 * (i + 1),
            algorithm=algorithm,
            lr=lr,
            seed=seed,
            train_loss=1.0,
            test_accuracy=acc,
            test_macro_f1=f,
            wall_time_ms=0,
            clients=(0, 1),
        )
        for i, (acc, f) in enumerate(zip(accuracies, f1))
    ]
    return CellRun(algorithm, lr, seed, records)
