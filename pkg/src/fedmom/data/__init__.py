"""Datasets, loaders and client partitioning."""

from .dataset import Dataset
from .mnist import load_mnist, load_mnist_split, split_paths
from .partition import (
    ClientShard,
    PartitionConfig,
    class_entropy,
    mean_class_entropy,
    partition_dirichlet,
    write_partition_csv,
)
from .synthetic import class_directions, make_synthetic

__all__ = [
    "ClientShard",
    "Dataset",
    "PartitionConfig",
    "class_directions",
    "class_entropy",
    "load_mnist",
    "load_mnist_split",
    "make_synthetic",
    "mean_class_entropy",
    "partition_dirichlet",
    "split_paths",
    "write_partition_csv",
]
