"""
In-memory classification dataset.
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import numpy.typing as npt

from ..errors import EmptyDatasetError, LabelRangeError, DimensionMismatchError


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (N x D, float64) with aligned integer labels."""

    features: npt.NDArray[np.float64]
    labels: npt.NDArray[np.int64]
    num_classes: int

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise DimensionMismatchError("features rank", 2, self.features.ndim)
        if self.features.shape[0] != self.labels.shape[0]:
            raise DimensionMismatchError(
                "label count", self.features.shape[0], self.labels.shape[0]
            )
        if self.num_classes < 1:
            raise LabelRangeError(
                f"num_classes must be positive, got {self.num_classes}",
                {"num_classes": self.num_classes},
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise LabelRangeError(
                f"labels must lie in [0, {self.num_classes})",
                {
                    "num_classes": self.num_classes,
                    "min_label": int(self.labels.min()),
                    "max_label": int(self.labels.max()),
                },
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def class_counts(self) -> npt.NDArray[np.int64]:
        return np.bincount(self.labels, minlength=self.num_classes).astype(np.int64)

    def subset(self, indices: Union[Sequence[int], npt.NDArray[np.int64]]) -> "Dataset":
        """Rows at ``indices``, in the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            raise EmptyDatasetError("subset would be empty")
        return Dataset(self.features[idx], self.labels[idx], self.num_classes)
