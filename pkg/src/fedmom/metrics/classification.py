"""
Confusion matrix, accuracy and macro F1.
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from ..errors import EmptyDatasetError, LabelRangeError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    counts: npt.NDArray[np.int64]

    @classmethod
    def from_predictions(
        cls,
        labels: npt.NDArray[np.int64],
        predictions: npt.NDArray[np.int64],
        num_classes: int,
    ) -> "ConfusionMatrix":
        labels = np.asarray(labels, dtype=np.int64)
        predictions = np.asarray(predictions, dtype=np.int64)
        for name, values in (("labels", labels), ("predictions", predictions)):
            if values.size and (values.min() < 0 or values.max() >= num_classes):
                raise LabelRangeError(
                    f"{name} must lie in [0, {num_classes})", {"num_classes": num_classes}
                )
        flat = np.bincount(labels * num_classes + predictions, minlength=num_classes * num_classes)
        return cls(flat.reshape(num_classes, num_classes).astype(np.int64))

    @property
    def num_classes(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        if self.total == 0:
            raise EmptyDatasetError("confusion matrix is empty")
        return float(np.trace(self.counts) / self.total)


def macro_f1(cm: ConfusionMatrix) -> float:
    """
    Unweighted mean of per-class F1.

    Zero denominators count as 0, so a class that is neither present nor
    predicted contributes F1 = 0.
    """
    if cm.total == 0:
        raise EmptyDatasetError("confusion matrix is empty")
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    actual = counts.sum(axis=1)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, actual, out=np.zeros_like(tp), where=actual > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return float(f1.mean())
