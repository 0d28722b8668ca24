"""
MNIST reader for the IDX binary format.

Image files:
    [offset] [type]          [value]
    0000     32 bit integer  0x00000803 magic number (big-endian)
    0004     32 bit integer  number of images
    0008     32 bit integer  number of rows
    0012     32 bit integer  number of columns
    0016     unsigned byte   pixels, row-major

Label files:
    0000     32 bit integer  0x00000801 magic number (big-endian)
    0004     32 bit integer  number of items
    0008     unsigned byte   labels

Both plain and gzip-compressed files are accepted.
"""

import gzip
import logging
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

from ..errors import DatasetNotFoundError, IdxFormatError
from .dataset import Dataset

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
MNIST_CLASSES = 10

SPLIT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}

PathLike = Union[str, Path]


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    if not path.is_file():
        raise DatasetNotFoundError(f"IDX file not found: {path}", {"path": str(path)})
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def _check_magic(raw: bytes, expected: int, path: PathLike) -> None:
    if len(raw) < 4:
        raise IdxFormatError(
            f"truncated file {path}: missing header", {"path": str(path), "size": len(raw)}
        )
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected:
        raise IdxFormatError(
            f"wrong magic in {path}: expected 0x{expected:08x}, got 0x{magic:08x}",
            {"path": str(path), "expected": expected, "actual": magic},
        )


def read_idx_images(path: PathLike) -> npt.NDArray[np.uint8]:
    """Raw pixels as an (N, rows*cols) uint8 array."""
    raw = _read_bytes(path)
    _check_magic(raw, IMAGES_MAGIC, path)
    if len(raw) < 16:
        raise IdxFormatError(f"truncated file {path}: short header", {"path": str(path)})
    _, count, rows, cols = struct.unpack(">IIII", raw[:16])
    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise IdxFormatError(
            f"truncated file {path}: expected {expected} bytes, got {len(raw)}",
            {"path": str(path), "expected_bytes": expected, "actual_bytes": len(raw)},
        )
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pixels.reshape(count, rows * cols)


def read_idx_labels(path: PathLike) -> npt.NDArray[np.uint8]:
    raw = _read_bytes(path)
    _check_magic(raw, LABELS_MAGIC, path)
    if len(raw) < 8:
        raise IdxFormatError(f"truncated file {path}: short header", {"path": str(path)})
    _, count = struct.unpack(">II", raw[:8])
    if len(raw) < 8 + count:
        raise IdxFormatError(
            f"truncated file {path}: expected {8 + count} bytes, got {len(raw)}",
            {"path": str(path), "expected_bytes": 8 + count, "actual_bytes": len(raw)},
        )
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=8)


def load_mnist(images_path: PathLike, labels_path: PathLike) -> Dataset:
    """Images scaled to [0, 1] with labels aligned by record order."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels",
            {"images": int(images.shape[0]), "labels": int(labels.shape[0])},
        )
    features = images.astype(np.float64) / 255.0
    logger.debug("loaded %d MNIST records from %s", len(labels), images_path)
    return Dataset(features, labels.astype(np.int64), MNIST_CLASSES)


def split_paths(data_dir: PathLike, split: str) -> Tuple[Path, Path]:
    """Locate the official file pair for ``split``, plain or ``.gz``."""
    if split not in SPLIT_FILES:
        raise DatasetNotFoundError(f"unknown MNIST split {split!r}", {"split": split})
    data_dir = Path(data_dir)
    resolved = []
    for name in SPLIT_FILES[split]:
        for candidate in (data_dir / name, data_dir / f"{name}.gz"):
            if candidate.is_file():
                resolved.append(candidate)
                break
        else:
            raise DatasetNotFoundError(
                f"missing MNIST file {name}[.gz] in {data_dir}",
                {"data_dir": str(data_dir), "file": name},
            )
    return resolved[0], resolved[1]


def load_mnist_split(data_dir: PathLike, split: str) -> Dataset:
    images_path, labels_path = split_paths(data_dir, split)
    return load_mnist(images_path, labels_path)
