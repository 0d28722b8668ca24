"""
fedmom - federated learning with server-aggregated momentum.

This package provides:
- A NumPy MLP with analytic gradients
- MNIST IDX loading, synthetic data and Dirichlet non-IID partitioning
- Standard and reversed momentum for local SGD
- FedAvg / MFL / RMFL rounds with deterministic client sampling
- Accuracy, macro F1 and gradient-divergence diagnostics
- Resumable experiment sweeps and seed-averaged result tables

Example usage:
    from fedmom import load_config, run_experiment, summarize_run_dir

    cfg = load_config("experiment.config.yaml")
    run_dir = run_experiment(cfg)
    rows, table = summarize_run_dir(run_dir)
    print(table)
"""

from .__version__ import __version__
from .config import ExperimentConfig, load_config
from .data import ClientShard, Dataset, PartitionConfig, load_mnist, make_synthetic, partition_dirichlet
from .errors import FedMomError
from .experiments import run_diagnostics, run_experiment, select_best_lr, summarize, summarize_run_dir
from .federated import Algorithm, FederatedSimulation, FederationConfig, ServerState, run_round
from .metrics import ConfusionMatrix, divergence_trend, macro_f1, step_divergence
from .nn import MlpArchitecture, init_params, loss_and_grad
from .optim import MomentumScheme, MomentumState, OptimizerConfig, apply_step, final_momentum

__all__ = [
    "Algorithm",
    "ClientShard",
    "ConfusionMatrix",
    "Dataset",
    "ExperimentConfig",
    "FedMomError",
    "FederatedSimulation",
    "FederationConfig",
    "MlpArchitecture",
    "MomentumScheme",
    "MomentumState",
    "OptimizerConfig",
    "PartitionConfig",
    "ServerState",
    "apply_step",
    "divergence_trend",
    "final_momentum",
    "init_params",
    "load_config",
    "load_mnist",
    "loss_and_grad",
    "macro_f1",
    "make_synthetic",
    "partition_dirichlet",
    "run_diagnostics",
    "run_experiment",
    "run_round",
    "select_best_lr",
    "step_divergence",
    "summarize",
    "summarize_run_dir",
    "__version__",
]
