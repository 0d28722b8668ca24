"""
Drives run_round for a whole federated training run.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Optional, Sequence, Tuple

from ..data.dataset import Dataset
from ..data.partition import ClientShard
from ..nn.mlp import MlpArchitecture
from .config import FederationConfig
from .server import RoundRecord, ServerState, run_round

logger = logging.getLogger(__name__)


class FederatedSimulation:
    """Runs ``cfg.rounds`` rounds, evaluating every ``eval_every`` rounds."""

    def __init__(
        self,
        arch: MlpArchitecture,
        train_set: Dataset,
        shards: Sequence[ClientShard],
        cfg: FederationConfig,
        test_set: Optional[Dataset] = None,
        eval_every: int = 1,
        threads: int = 1,
    ):
        if len(shards) != cfg.num_clients:
            raise ValueError(f"{len(shards)} shards for {cfg.num_clients} clients")
        self.arch = arch
        self.train_set = train_set
        self.shards = list(shards)
        self.cfg = cfg
        self.test_set = test_set
        self.eval_every = max(1, eval_every)
        self.threads = max(1, threads)

    def _should_evaluate(self, round_number: int) -> bool:
        return round_number % self.eval_every == 0 or round_number == self.cfg.rounds

    def run(self, server: Optional[ServerState] = None) -> Iterator[Tuple[ServerState, RoundRecord]]:
        """Yield (state, record) after every round."""
        state = server or ServerState.initial(self.arch, self.cfg.seed)
        executor = ThreadPoolExecutor(max_workers=self.threads) if self.threads > 1 else None
        try:
            while state.round < self.cfg.rounds:
                test_set = self.test_set if self._should_evaluate(state.round + 1) else None
                state, record = run_round(
                    state, self.train_set, self.shards, self.cfg, self.arch,
                    test_set=test_set, executor=executor,
                )
                yield state, record
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
