"""
Exception hierarchy for the federated momentum simulator.

Every error carries a readable message and a structured ``detail`` dict so
callers (and the CLI) can report exactly which dimension, client or file
was at fault.
"""

from typing import Any, Dict, Optional


class FedMomError(Exception):
    """Base class for all simulator errors."""

    def __init__(self, message: str, detail: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.detail: Dict[str, Any] = detail or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "detail": self.detail,
        }


# Model / tensors

class ArchitectureError(FedMomError):
    """Invalid network dimensions."""


class DimensionMismatchError(FedMomError):
    """Input or parameter shape does not match the architecture."""

    def __init__(self, what: str, expected: Any, actual: Any):
        super().__init__(
            f"{what}: expected {expected}, got {actual}",
            {"what": what, "expected": expected, "actual": actual},
        )


class LabelRangeError(FedMomError):
    """A label lies outside [0, num_classes)."""


class EmptyDatasetError(FedMomError):
    """An operation received no samples."""


# Data

class IdxFormatError(FedMomError):
    """Malformed IDX file (magic number, truncation, count mismatch)."""


class DatasetNotFoundError(FedMomError):
    """Dataset files are missing."""


class PartitionError(FedMomError):
    """The dataset cannot be partitioned as requested."""


# Optimisation / federation

class LengthMismatchError(FedMomError):
    """Two vectors that must share the model's layout differ in length."""

    def __init__(self, what: str, expected: int, actual: int):
        super().__init__(
            f"{what}: expected length {expected}, got {actual}",
            {"what": what, "expected": expected, "actual": actual},
        )


class NonFiniteGradientError(FedMomError):
    """A gradient contained NaN or Inf entries."""


class MomentumNotReadyError(FedMomError):
    """Momentum was requested before any optimizer step."""


class ClientTrainingError(FedMomError):
    """Local training failed on a client; the round is aborted."""

    def __init__(self, client_id: int, round_index: int, cause: FedMomError):
        super().__init__(
            f"client {client_id} failed in round {round_index}: {cause.message}",
            {"client_id": client_id, "round": round_index, "cause": cause.to_dict()},
        )
        self.client_id = client_id
        self.round_index = round_index
        self.cause = cause


class AggregationError(FedMomError):
    """Client updates cannot be aggregated."""


# Metrics

class ZeroMeanGradientError(FedMomError):
    """The mean client gradient is the zero vector."""


class InsufficientStepsError(FedMomError):
    """Not enough data points for a diagnostic statistic."""


# Experiments

class ConfigError(FedMomError):
    """Configuration file is missing or invalid."""


class OutputDirError(FedMomError):
    """The output directory cannot be created or written."""


class ManifestMismatchError(FedMomError):
    """A run directory belongs to a different configuration."""


class IncompleteRunsError(FedMomError):
    """Some (algorithm, lr, seed) runs are missing."""
