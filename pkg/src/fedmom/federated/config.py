"""
Federation settings and the algorithm -> momentum scheme mapping.
"""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..optim.momentum import MomentumScheme, OptimizerConfig


class Algorithm(str, Enum):
    FEDAVG = "fedavg"
    MFL = "mfl"
    RMFL = "rmfl"


SCHEME_BY_ALGORITHM = {
    Algorithm.FEDAVG: MomentumScheme.NONE,
    Algorithm.MFL: MomentumScheme.STANDARD,
    Algorithm.RMFL: MomentumScheme.REVERSED,
}


class FederationConfig(BaseModel):
    """One federated training run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_clients: int = Field(100, ge=1)
    clients_per_round: int = Field(10, ge=1)
    local_epochs: int = Field(2, ge=1)
    # Fixed number of local steps per round; overrides local_epochs when set.
    local_steps: Optional[int] = Field(None, ge=1)
    batch_size: int = Field(50, ge=1)
    rounds: int = Field(200, ge=1)
    algorithm: Algorithm = Algorithm.MFL
    optimizer: OptimizerConfig
    seed: int = 0
    collect_diagnostics: bool = False

    @model_validator(mode="after")
    def _check_consistency(self) -> "FederationConfig":
        if self.clients_per_round > self.num_clients:
            raise ValueError(
                f"clients_per_round ({self.clients_per_round}) exceeds num_clients ({self.num_clients})"
            )
        expected = SCHEME_BY_ALGORITHM[self.algorithm]
        if self.optimizer.scheme != expected:
            raise ValueError(
                f"algorithm {self.algorithm.value} needs momentum scheme {expected.value}, "
                f"got {self.optimizer.scheme.value}"
            )
        return self

    @classmethod
    def for_algorithm(
        cls,
        algorithm: Algorithm,
        learning_rate: float,
        beta: float = 0.9,
        reversed_descent: bool = False,
        **kwargs: Any,
    ) -> "FederationConfig":
        algorithm = Algorithm(algorithm)
        optimizer = OptimizerConfig(
            learning_rate=learning_rate,
            beta=beta,
            scheme=SCHEME_BY_ALGORITHM[algorithm],
            reversed_descent=reversed_descent,
        )
        return cls(algorithm=algorithm, optimizer=optimizer, **kwargs)
