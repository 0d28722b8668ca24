"""Local SGD / SGDM and momentum estimates."""

from .momentum import (
    MomentumScheme,
    MomentumState,
    OptimizerConfig,
    apply_step,
    final_momentum,
    reset,
)

__all__ = [
    "MomentumScheme",
    "MomentumState",
    "OptimizerConfig",
    "apply_step",
    "final_momentum",
    "reset",
]
