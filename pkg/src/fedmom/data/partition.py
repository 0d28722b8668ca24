"""
Label-skewed client partitioning with Dirichlet class proportions.

Every client receives N // num_clients samples (the last one also takes the
remainder). Its class mix follows p ~ Dir(alpha * 1); when a class pool runs
dry the unmet demand moves to classes that still have samples, so the shards
always cover the dataset exactly once.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from ..errors import EmptyDatasetError, PartitionError
from ..seeding import STREAM_PARTITION, derive_rng
from .dataset import Dataset

logger = logging.getLogger(__name__)


class PartitionConfig(BaseModel):
    """How to split a dataset across clients."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_clients: int = Field(100, ge=1)
    alpha: float = Field(..., gt=0)
    seed: int = 0


@dataclass(frozen=True)
class ClientShard:
    """One client's slice of the parent dataset."""

    client_id: int
    indices: npt.NDArray[np.int64]
    class_counts: npt.NDArray[np.int64]

    @property
    def num_samples(self) -> int:
        return int(self.indices.shape[0])

    def proportions(self) -> npt.NDArray[np.float64]:
        total = self.class_counts.sum()
        if total == 0:
            return np.zeros(self.class_counts.shape, dtype=np.float64)
        return self.class_counts / total

    def check(self, ds: Dataset) -> None:
        """Verify the shard invariants against its parent dataset."""
        if np.unique(self.indices).size != self.indices.size:
            raise PartitionError(f"shard {self.client_id} has duplicate indices", {"client_id": self.client_id})
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= len(ds)):
            raise PartitionError(f"shard {self.client_id} indexes outside the dataset", {"client_id": self.client_id})
        actual = np.bincount(ds.labels[self.indices], minlength=ds.num_classes)
        if not np.array_equal(actual, self.class_counts):
            raise PartitionError(
                f"shard {self.client_id} class counts disagree with labels",
                {"client_id": self.client_id, "recorded": self.class_counts.tolist(), "actual": actual.tolist()},
            )


def _apportion(total: int, weights: npt.NDArray[np.float64]) -> npt.NDArray[np.int64]:
    """Largest-remainder rounding of ``total * weights`` (weights sum to 1)."""
    raw = total * weights
    floor = np.floor(raw).astype(np.int64)
    short = total - int(floor.sum())
    if short > 0:
        order = np.argsort(-(raw - floor), kind="stable")
        floor[order[:short]] += 1
    return floor


def _sample_proportions(rng: np.random.Generator, alpha: float, num_classes: int) -> npt.NDArray[np.float64]:
    p = np.nan_to_num(rng.dirichlet(np.full(num_classes, alpha)), nan=0.0)
    total = p.sum()
    if not total > 0:
        # Tiny alpha can underflow every component.
        p = np.zeros(num_classes)
        p[rng.integers(num_classes)] = 1.0
        return p
    return p / total


def _allocate(
    demand: int, proportions: npt.NDArray[np.float64], available: npt.NDArray[np.int64]
) -> npt.NDArray[np.int64]:
    take = np.zeros_like(available)
    while demand > 0:
        left = available - take
        weights = np.where(left > 0, proportions, 0.0)
        if not weights.sum() > 0:
            weights = left.astype(np.float64)
        grant = np.minimum(_apportion(demand, weights / weights.sum()), left)
        take += grant
        demand -= int(grant.sum())
    return take


def partition_dirichlet(ds: Dataset, cfg: PartitionConfig) -> List[ClientShard]:
    """Split ``ds`` into ``cfg.num_clients`` disjoint, covering shards."""
    n = len(ds)
    if n == 0:
        raise EmptyDatasetError("cannot partition an empty dataset")
    if cfg.num_clients > n:
        raise PartitionError(
            f"{cfg.num_clients} clients exceed {n} samples",
            {"num_clients": cfg.num_clients, "num_samples": n},
        )

    rng = derive_rng(cfg.seed, STREAM_PARTITION)
    pools = [rng.permutation(np.flatnonzero(ds.labels == c)) for c in range(ds.num_classes)]
    available = np.array([pool.size for pool in pools], dtype=np.int64)
    cursor = np.zeros(ds.num_classes, dtype=np.int64)

    base = n // cfg.num_clients
    shards: List[ClientShard] = []
    for client_id in range(cfg.num_clients):
        size = base if client_id < cfg.num_clients - 1 else n - base * (cfg.num_clients - 1)
        take = _allocate(size, _sample_proportions(rng, cfg.alpha, ds.num_classes), available)
        indices = np.concatenate(
            [pools[c][cursor[c]:cursor[c] + take[c]] for c in range(ds.num_classes)]
        ).astype(np.int64)
        cursor += take
        available -= take
        shards.append(ClientShard(client_id, indices, take.copy()))

    logger.debug(
        "partitioned %d samples over %d clients (alpha=%g, seed=%d)",
        n, cfg.num_clients, cfg.alpha, cfg.seed,
    )
    return shards


def class_entropy(shard: ClientShard) -> float:
    """Shannon entropy (nats) of the shard's class proportions."""
    p = shard.proportions()
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def mean_class_entropy(shards: Sequence[ClientShard]) -> float:
    return float(np.mean([class_entropy(s) for s in shards]))


def write_partition_csv(shards: Sequence[ClientShard], path: Union[str, Path]) -> Path:
    """client_id followed by one count column per class."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    num_classes = shards[0].class_counts.size if shards else 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["client_id"] + [f"class_{c}" for c in range(num_classes)])
        for shard in shards:
            writer.writerow([shard.client_id] + shard.class_counts.tolist())
    return path
