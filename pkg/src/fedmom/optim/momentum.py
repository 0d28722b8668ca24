"""
Local optimizer with momentum accounting.

Schemes:
    none      plain SGD, x <- x - lr * g
    standard  SGDM, v <- beta * v + g, x <- x - lr * v
    reversed  SGDM for the descent, plus the reversed-decay estimate

        r_t = (1 - beta) v0 + (1 - beta) sum_{i<t} beta^i g_i + beta^t g_t

    kept incrementally as r_t = r_{t-1} + beta^t (g_t - g_{t-1}).

The reversed estimate only replaces what is sent to the server unless
``reversed_descent`` is set.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from ..errors import LengthMismatchError, MomentumNotReadyError, NonFiniteGradientError

Vector = npt.NDArray[np.float64]


class MomentumScheme(str, Enum):
    NONE = "none"
    STANDARD = "standard"
    REVERSED = "reversed"


class OptimizerConfig(BaseModel):
    """Local optimizer settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    learning_rate: float = Field(..., gt=0)
    beta: float = Field(0.9, ge=0, lt=1)
    scheme: MomentumScheme = MomentumScheme.STANDARD
    reversed_descent: bool = False


@dataclass(frozen=True)
class MomentumState:
    """
    Momentum buffers for one client's local run.

    Arrays are never mutated in place; every step returns a new state.
    """

    v: Vector
    v0: Vector
    r: Vector
    last_grad: Vector
    beta_pow: float = 1.0
    step: int = 0

    @classmethod
    def zeros(cls, size: int) -> "MomentumState":
        z = np.zeros(size, dtype=np.float64)
        return cls(v=z, v0=z, r=z, last_grad=z)

    @property
    def size(self) -> int:
        return int(self.v.shape[0])


def reset(state: MomentumState, v_init: Vector) -> MomentumState:
    """Start a local run from the broadcast momentum ``v_init``."""
    if v_init.shape != (state.size,):
        raise LengthMismatchError("initial momentum", state.size, int(v_init.size))
    start = np.array(v_init, dtype=np.float64, copy=True)
    zeros = np.zeros(state.size, dtype=np.float64)
    return MomentumState(v=start, v0=start, r=zeros, last_grad=zeros, beta_pow=1.0, step=0)


def apply_step(
    state: MomentumState, params: Vector, grad: Vector, cfg: OptimizerConfig
) -> Tuple[Vector, MomentumState]:
    """One local update; returns the new parameters and momentum state."""
    if params.shape != (state.size,):
        raise LengthMismatchError("parameters", state.size, int(params.size))
    if grad.shape != (state.size,):
        raise LengthMismatchError("gradient", state.size, int(grad.size))
    if not np.all(np.isfinite(grad)):
        bad = int(np.count_nonzero(~np.isfinite(grad)))
        raise NonFiniteGradientError(
            f"gradient has {bad} non-finite entries at local step {state.step}",
            {"step": state.step, "non_finite": bad},
        )

    beta = cfg.beta
    bookkeeping = {
        "last_grad": grad,
        "beta_pow": state.beta_pow * beta,
        "step": state.step + 1,
    }

    if cfg.scheme == MomentumScheme.NONE:
        return params - cfg.learning_rate * grad, replace(state, **bookkeeping)

    v = beta * state.v + grad
    r = state.r
    if cfg.scheme == MomentumScheme.REVERSED:
        if state.step == 0:
            r = (1.0 - beta) * state.v0 + grad
        else:
            r = state.r + state.beta_pow * (grad - state.last_grad)

    direction = r if (cfg.scheme == MomentumScheme.REVERSED and cfg.reversed_descent) else v
    return params - cfg.learning_rate * direction, replace(state, v=v, r=r, **bookkeeping)


def final_momentum(state: MomentumState, cfg: OptimizerConfig) -> Vector:
    """The momentum a client transmits after local training."""
    if state.step == 0:
        raise MomentumNotReadyError("no optimizer step has been applied", {"step": 0})
    if cfg.scheme == MomentumScheme.STANDARD:
        return state.v
    if cfg.scheme == MomentumScheme.REVERSED:
        return state.r
    return np.zeros(state.size, dtype=np.float64)
