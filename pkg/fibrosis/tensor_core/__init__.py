from fibrosis.tensor_core.tensor import Graph, Tensor, as_tensor, backward, is_grad_enabled, no_grad
from fibrosis.tensor_core.functional import (
    activation,
    add,
    bce_loss,
    conv2d,
    conv_transpose2d,
    dense,
    l1_loss,
    leaky_relu,
    mul,
    reduce_mean,
    reduce_sum,
    reshape,
    sigmoid,
    sub,
    tanh,
)
from fibrosis.tensor_core.optim import Adam, AdamState, adam_step
from fibrosis.tensor_core.gradcheck import gradcheck, numerical_gradient

__all__ = [
    "Adam",
    "AdamState",
    "Graph",
    "Tensor",
    "activation",
    "adam_step",
    "add",
    "as_tensor",
    "backward",
    "bce_loss",
    "conv2d",
    "conv_transpose2d",
    "dense",
    "gradcheck",
    "is_grad_enabled",
    "l1_loss",
    "leaky_relu",
    "mul",
    "no_grad",
    "numerical_gradient",
    "reduce_mean",
    "reduce_sum",
    "reshape",
    "sigmoid",
    "sub",
    "tanh",
]
