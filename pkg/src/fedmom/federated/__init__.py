"""Federated training loop: FedAvg, MFL and RMFL behind one interface."""

from .client import ClientUpdate, local_batches, local_train
from .config import SCHEME_BY_ALGORITHM, Algorithm, FederationConfig
from .server import RoundRecord, ServerState, aggregate, run_round, select_clients
from .simulation import FederatedSimulation

__all__ = [
    "Algorithm",
    "ClientUpdate",
    "FederatedSimulation",
    "FederationConfig",
    "RoundRecord",
    "SCHEME_BY_ALGORITHM",
    "ServerState",
    "aggregate",
    "local_batches",
    "local_train",
    "run_round",
    "select_clients",
]
