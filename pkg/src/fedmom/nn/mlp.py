"""
Two-layer perceptron (ReLU hidden layer, softmax output) over a flat
parameter vector.

Parameter layout, in order:
    W1  (in_dim x hidden_dim, row-major)
    b1  (hidden_dim)
    W2  (hidden_dim x out_dim, row-major)
    b2  (out_dim)
"""

from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np
import numpy.typing as npt

from ..data.dataset import Dataset
from ..errors import (
    ArchitectureError,
    DimensionMismatchError,
    EmptyDatasetError,
    LabelRangeError,
    LengthMismatchError,
)
from ..seeding import STREAM_INIT, derive_rng

ParameterVector = npt.NDArray[np.float64]
GradientVector = npt.NDArray[np.float64]


@dataclass(frozen=True)
class MlpArchitecture:
    """Dimensions of the in -> hidden (ReLU) -> out network."""

    in_dim: int
    hidden_dim: int
    out_dim: int
    activation: str = "relu"

    def __post_init__(self) -> None:
        dims = {"in_dim": self.in_dim, "hidden_dim": self.hidden_dim, "out_dim": self.out_dim}
        bad = {k: v for k, v in dims.items() if v <= 0}
        if bad:
            raise ArchitectureError(f"dimensions must be positive: {bad}", bad)
        if self.activation != "relu":
            raise ArchitectureError(
                f"unsupported activation {self.activation!r}", {"activation": self.activation}
            )

    @property
    def num_params(self) -> int:
        return (
            self.in_dim * self.hidden_dim
            + self.hidden_dim
            + self.hidden_dim * self.out_dim
            + self.out_dim
        )


class MlpWeights(NamedTuple):
    w1: npt.NDArray[np.float64]
    b1: npt.NDArray[np.float64]
    w2: npt.NDArray[np.float64]
    b2: npt.NDArray[np.float64]


def unflatten(params: ParameterVector, arch: MlpArchitecture) -> MlpWeights:
    """Views of the four parameter blocks (no copies)."""
    if params.shape != (arch.num_params,):
        raise LengthMismatchError("parameter vector", arch.num_params, int(params.size))
    i, h, o = arch.in_dim, arch.hidden_dim, arch.out_dim
    s1 = i * h
    s2 = s1 + h
    s3 = s2 + h * o
    return MlpWeights(
        w1=params[:s1].reshape(i, h),
        b1=params[s1:s2],
        w2=params[s2:s3].reshape(h, o),
        b2=params[s3:],
    )


def flatten(weights: MlpWeights) -> ParameterVector:
    return np.concatenate([np.ravel(block) for block in weights]).astype(np.float64, copy=False)


def init_params(arch: MlpArchitecture, seed: int) -> ParameterVector:
    """Glorot-uniform weights, zero biases; deterministic in (arch, seed)."""
    rng = derive_rng(seed, STREAM_INIT)
    s1 = np.sqrt(6.0 / (arch.in_dim + arch.hidden_dim))
    s2 = np.sqrt(6.0 / (arch.hidden_dim + arch.out_dim))
    return flatten(
        MlpWeights(
            w1=rng.uniform(-s1, s1, size=(arch.in_dim, arch.hidden_dim)),
            b1=np.zeros(arch.hidden_dim),
            w2=rng.uniform(-s2, s2, size=(arch.hidden_dim, arch.out_dim)),
            b2=np.zeros(arch.out_dim),
        )
    )


def _check_features(arch: MlpArchitecture, features: npt.NDArray[np.float64]) -> None:
    if features.ndim != 2 or features.shape[1] != arch.in_dim:
        raise DimensionMismatchError(
            "batch features", ("N", arch.in_dim), tuple(features.shape)
        )


def _softmax(logits: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _forward_hidden(
    w: MlpWeights, features: npt.NDArray[np.float64]
) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    pre = features @ w.w1 + w.b1
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ w.w2 + w.b2
    return hidden, logits


def forward(
    params: ParameterVector, arch: MlpArchitecture, batch_features: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    """Class-probability matrix, one row per sample."""
    _check_features(arch, batch_features)
    _, logits = _forward_hidden(unflatten(params, arch), batch_features)
    return _softmax(logits)


def loss_and_grad(
    params: ParameterVector,
    arch: MlpArchitecture,
    batch_features: npt.NDArray[np.float64],
    batch_labels: npt.NDArray[np.int64],
) -> Tuple[float, GradientVector]:
    """Mean softmax cross-entropy and its exact gradient w.r.t. ``params``."""
    _check_features(arch, batch_features)
    n = batch_features.shape[0]
    if n == 0:
        raise EmptyDatasetError("loss_and_grad needs a nonempty batch")
    labels = np.asarray(batch_labels, dtype=np.int64)
    if labels.shape != (n,):
        raise DimensionMismatchError("batch labels", (n,), tuple(labels.shape))
    if labels.min() < 0 or labels.max() >= arch.out_dim:
        raise LabelRangeError(
            f"labels must lie in [0, {arch.out_dim})",
            {"out_dim": arch.out_dim, "min_label": int(labels.min()), "max_label": int(labels.max())},
        )

    w = unflatten(params, arch)
    hidden, logits = _forward_hidden(w, batch_features)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(log_norm - shifted[rows, labels]))

    # d(loss)/d(logits) = (softmax - onehot) / n
    d_logits = np.exp(shifted - log_norm[:, None])
    d_logits[rows, labels] -= 1.0
    d_logits /= n

    d_hidden = d_logits @ w.w2.T
    d_hidden[hidden <= 0.0] = 0.0

    grad = flatten(
        MlpWeights(
            w1=batch_features.T @ d_hidden,
            b1=d_hidden.sum(axis=0),
            w2=hidden.T @ d_logits,
            b2=d_logits.sum(axis=0),
        )
    )
    return loss, grad


def predict(
    params: ParameterVector, arch: MlpArchitecture, features: npt.NDArray[np.float64]
) -> npt.NDArray[np.int64]:
    """Argmax class per row; ties go to the lowest index."""
    _check_features(arch, features)
    _, logits = _forward_hidden(unflatten(params, arch), features)
    return np.argmax(logits, axis=1).astype(np.int64)


def evaluate(
    params: ParameterVector, arch: MlpArchitecture, dataset: Dataset
) -> Tuple[float, npt.NDArray[np.int64]]:
    """Accuracy and predicted labels on ``dataset``."""
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    predictions = predict(params, arch, dataset.features)
    accuracy = float(np.mean(predictions == dataset.labels))
    return accuracy, predictions
