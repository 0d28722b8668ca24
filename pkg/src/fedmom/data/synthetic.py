"""
Gaussian-mixture classification data for fast desk-scale runs.
"""

import numpy as np
import numpy.typing as npt

from ..errors import EmptyDatasetError
from ..seeding import derive_rng
from .dataset import Dataset

# Class directions are independent of the sampling seed; train and test draws
# share class means.
_DIRECTION_SEED = 0x5EED


def class_directions(num_classes: int, dim: int) -> npt.NDArray[np.float64]:
    """One unit vector per class: standard basis when it fits, else fixed random."""
    if dim >= num_classes:
        return np.eye(num_classes, dim)
    rng = np.random.default_rng(_DIRECTION_SEED + 1000 * num_classes + dim)
    raw = rng.standard_normal((num_classes, dim))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def make_synthetic(
    num_classes: int,
    dim: int,
    per_class: int,
    class_separation: float,
    seed: int,
) -> Dataset:
    """
    ``per_class`` unit-variance isotropic samples around
    ``class_separation * u_c`` for each class ``c``; rows are grouped by class.
    """
    counts = {"num_classes": num_classes, "dim": dim, "per_class": per_class}
    bad = {k: v for k, v in counts.items() if v <= 0}
    if bad:
        raise EmptyDatasetError(f"synthetic dataset sizes must be positive: {bad}", bad)

    rng = derive_rng(seed)
    means = class_separation * class_directions(num_classes, dim)
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
    features = means[labels] + rng.standard_normal((num_classes * per_class, dim))
    return Dataset(features, labels, num_classes)
