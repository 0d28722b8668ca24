"""
Client side of a round: local training from the broadcast model and momentum.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np
import numpy.typing as npt

from ..data.dataset import Dataset
from ..data.partition import ClientShard
from ..errors import ClientTrainingError, EmptyDatasetError, LengthMismatchError, NonFiniteGradientError
from ..nn.mlp import GradientVector, MlpArchitecture, ParameterVector, loss_and_grad
from ..optim.momentum import MomentumState, apply_step, final_momentum, reset
from ..seeding import STREAM_SHUFFLE, derive_rng
from .config import Algorithm, FederationConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClientUpdate:
    """What a client sends back after local training."""

    client_id: int
    params: ParameterVector
    momentum: GradientVector
    num_samples: int
    train_loss: float
    num_steps: int
    step_grads: Optional[List[GradientVector]] = None


def local_batches(
    indices: npt.NDArray[np.int64],
    batch_size: int,
    epochs: int,
    rng: np.random.Generator,
    max_steps: Optional[int] = None,
) -> Iterator[npt.NDArray[np.int64]]:
    """
    Mini-batches over ``indices``, reshuffled every epoch; the last partial
    batch is kept. With ``max_steps`` the epochs repeat until that many
    batches have been produced, and ``epochs`` is ignored.
    """
    n = indices.shape[0]
    produced = 0
    epoch = 0
    while max_steps is not None or epoch < epochs:
        order = rng.permutation(indices)
        for start in range(0, n, batch_size):
            if max_steps is not None and produced >= max_steps:
                return
            yield order[start:start + batch_size]
            produced += 1
        epoch += 1


def local_train(
    client: ClientShard,
    ds: Dataset,
    start_params: ParameterVector,
    start_momentum: GradientVector,
    cfg: FederationConfig,
    round_index: int,
    arch: MlpArchitecture,
) -> ClientUpdate:
    """
    Run the client's local epochs and package its update.

    Args:
        client: The client's shard of ``ds``
        ds: Full training set
        start_params: Broadcast global model
        start_momentum: Broadcast global momentum (ignored under FedAvg)
        cfg: Federation settings, including the optimizer
        round_index: Zero-based round, keys the shuffle stream
        arch: Network architecture

    Returns:
        Final parameters, transmitted momentum, sample count and mean loss

    Raises:
        ClientTrainingError: A gradient or the parameters became non-finite
    """
    if client.num_samples == 0:
        raise EmptyDatasetError(f"client {client.client_id} has no samples", {"client_id": client.client_id})
    if start_momentum.shape != start_params.shape:
        raise LengthMismatchError("broadcast momentum", int(start_params.size), int(start_momentum.size))

    opt = cfg.optimizer
    if cfg.algorithm == Algorithm.FEDAVG:
        start_momentum = np.zeros_like(start_params)
    state = reset(MomentumState.zeros(start_params.size), start_momentum)
    rng = derive_rng(cfg.seed, STREAM_SHUFFLE, round_index, client.client_id)

    local = ds.subset(client.indices)
    positions = np.arange(len(local), dtype=np.int64)
    params = start_params
    losses: List[float] = []
    step_grads: Optional[List[GradientVector]] = [] if cfg.collect_diagnostics else None
    for batch in local_batches(positions, cfg.batch_size, cfg.local_epochs, rng, cfg.local_steps):
        loss, grad = loss_and_grad(params, arch, local.features[batch], local.labels[batch])
        try:
            params, state = apply_step(state, params, grad, opt)
        except NonFiniteGradientError as exc:
            raise ClientTrainingError(client.client_id, round_index, exc) from exc
        losses.append(loss)
        if step_grads is not None:
            step_grads.append(grad)

    if not np.all(np.isfinite(params)):
        raise ClientTrainingError(
            client.client_id,
            round_index,
            NonFiniteGradientError("parameters became non-finite", {"step": state.step}),
        )

    return ClientUpdate(
        client_id=client.client_id,
        params=params,
        momentum=final_momentum(state, opt),
        num_samples=client.num_samples,
        train_loss=float(np.mean(losses)),
        num_steps=state.step,
        step_grads=step_grads,
    )
