"""
Server side of the two-stage loop: client selection, broadcast, aggregation.
"""

import logging
import time
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..data.dataset import Dataset
from ..data.partition import ClientShard
from ..errors import AggregationError, ClientTrainingError, FedMomError, LengthMismatchError
from ..metrics.classification import ConfusionMatrix, macro_f1
from ..metrics.divergence import DivergenceRecord, divergence_records
from ..nn.mlp import GradientVector, MlpArchitecture, ParameterVector, evaluate, init_params
from ..seeding import STREAM_SELECT, derive_rng
from .client import ClientUpdate, local_train
from .config import Algorithm, FederationConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ServerState:
    """Global model, global momentum and the number of completed rounds."""

    global_params: ParameterVector
    global_momentum: GradientVector
    round: int = 0

    @classmethod
    def initial(cls, arch: MlpArchitecture, seed: int) -> "ServerState":
        params = init_params(arch, seed)
        return cls(global_params=params, global_momentum=np.zeros_like(params), round=0)


@dataclass(frozen=True)
class RoundRecord:
    """One global iteration's log row."""

    round: int
    algorithm: str
    lr: float
    seed: int
    train_loss: float
    test_accuracy: Optional[float]
    test_macro_f1: Optional[float]
    wall_time_ms: int
    clients: Tuple[int, ...]
    divergence: Tuple[DivergenceRecord, ...] = ()

    @property
    def evaluated(self) -> bool:
        return self.test_accuracy is not None


def select_clients(round_index: int, cfg: FederationConfig) -> npt.NDArray[np.int64]:
    """Sorted ids of the round's active clients, uniform without replacement."""
    if cfg.clients_per_round == cfg.num_clients:
        return np.arange(cfg.num_clients, dtype=np.int64)
    rng = derive_rng(cfg.seed, STREAM_SELECT, round_index)
    chosen = rng.choice(cfg.num_clients, size=cfg.clients_per_round, replace=False)
    return np.sort(chosen).astype(np.int64)


def aggregate(updates: Sequence[ClientUpdate]) -> Tuple[ParameterVector, GradientVector]:
    """Sample-weighted mean of client parameters and momenta, in input order."""
    if not updates:
        raise AggregationError("no client updates to aggregate")
    size = updates[0].params.size
    for u in updates:
        if u.params.shape != (size,):
            raise LengthMismatchError(f"client {u.client_id} parameters", size, int(u.params.size))
        if u.momentum.shape != (size,):
            raise LengthMismatchError(f"client {u.client_id} momentum", size, int(u.momentum.size))

    total = float(sum(u.num_samples for u in updates))
    if total <= 0:
        raise AggregationError("client sample counts sum to zero")
    params = np.zeros(size, dtype=np.float64)
    momentum = np.zeros(size, dtype=np.float64)
    for u in updates:
        weight = u.num_samples / total
        params += weight * u.params
        momentum += weight * u.momentum
    return params, momentum


def _evaluate(params: ParameterVector, arch: MlpArchitecture, test_set: Dataset) -> Tuple[float, float]:
    _, predictions = evaluate(params, arch, test_set)
    cm = ConfusionMatrix.from_predictions(test_set.labels, predictions, test_set.num_classes)
    return cm.accuracy(), macro_f1(cm)


def run_round(
    server: ServerState,
    ds: Dataset,
    shards: Sequence[ClientShard],
    cfg: FederationConfig,
    arch: MlpArchitecture,
    test_set: Optional[Dataset] = None,
    executor: Optional[Executor] = None,
) -> Tuple[ServerState, RoundRecord]:
    """
    select -> broadcast -> local training -> aggregate.

    A failing client aborts the whole round; nothing is aggregated.

    Args:
        server: State after the previous round
        ds: Full training set
        shards: One shard per client, indexed by client id
        cfg: Federation settings
        arch: Network architecture
        test_set: Evaluate the new model on this set when given
        executor: Train the selected clients through this pool when given

    Returns:
        The next server state and the round's record
    """
    if server.round >= cfg.rounds:
        raise FedMomError(
            f"round {server.round} is past the configured {cfg.rounds} rounds",
            {"round": server.round, "rounds": cfg.rounds},
        )
    started = time.perf_counter()
    selected = select_clients(server.round, cfg)

    args = [
        (shards[int(cid)], ds, server.global_params, server.global_momentum, cfg, server.round, arch)
        for cid in selected
    ]
    try:
        if executor is None:
            updates: List[ClientUpdate] = [local_train(*a) for a in args]
        else:
            futures = [executor.submit(local_train, *a) for a in args]
            updates = [f.result() for f in futures]
    except ClientTrainingError as exc:
        logger.error("round %d aborted: %s", server.round + 1, exc.message)
        raise

    params, momentum = aggregate(updates)
    if cfg.algorithm == Algorithm.FEDAVG:
        momentum = server.global_momentum
    next_state = ServerState(global_params=params, global_momentum=momentum, round=server.round + 1)

    divergence: Tuple[DivergenceRecord, ...] = ()
    if cfg.collect_diagnostics:
        divergence = tuple(
            divergence_records(next_state.round, [u.step_grads or [] for u in updates])
        )

    accuracy: Optional[float] = None
    f1: Optional[float] = None
    if test_set is not None:
        accuracy, f1 = _evaluate(params, arch, test_set)

    record = RoundRecord(
        round=next_state.round,
        algorithm=cfg.algorithm.value,
        lr=cfg.optimizer.learning_rate,
        seed=cfg.seed,
        train_loss=float(np.mean([u.train_loss for u in updates])),
        test_accuracy=accuracy,
        test_macro_f1=f1,
        wall_time_ms=int(round((time.perf_counter() - started) * 1000)),
        clients=tuple(int(c) for c in selected),
        divergence=divergence,
    )
    logger.debug(
        "round %d: loss=%.4f acc=%s clients=%s",
        record.round, record.train_loss, accuracy, list(record.clients),
    )
    return next_state, record
