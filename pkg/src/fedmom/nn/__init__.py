"""Dense two-layer perceptron over flat parameter vectors."""

from .mlp import (
    GradientVector,
    MlpArchitecture,
    MlpWeights,
    ParameterVector,
    evaluate,
    flatten,
    forward,
    init_params,
    loss_and_grad,
    predict,
    unflatten,
)

__all__ = [
    "GradientVector",
    "MlpArchitecture",
    "MlpWeights",
    "ParameterVector",
    "evaluate",
    "flatten",
    "forward",
    "init_params",
    "loss_and_grad",
    "predict",
    "unflatten",
]
