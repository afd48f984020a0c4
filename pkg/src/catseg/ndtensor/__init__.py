"""Minimal tensor library: tape autodiff, Adam, and a small-matrix SVD."""
from .linalg import svd_small
from .optim import AdamState, adam_step
from .tensor import (
    Tape,
    Tensor,
    add,
    backward,
    broadcast_to,
    concat,
    default_dtype,
    dropout,
    exp,
    gather_rows,
    getitem,
    layer_norm,
    log,
    masked_fill,
    matmul,
    mean,
    mul,
    no_tape,
    relu,
    reshape,
    softmax,
    sub,
    sum,
    transpose,
    verification_mode,
)

__all__ = [
    "AdamState",
    "Tape",
    "Tensor",
    "adam_step",
    "add",
    "backward",
    "broadcast_to",
    "concat",
    "default_dtype",
    "dropout",
    "exp",
    "gather_rows",
    "getitem",
    "layer_norm",
    "log",
    "masked_fill",
    "matmul",
    "mean",
    "mul",
    "no_tape",
    "relu",
    "reshape",
    "softmax",
    "sub",
    "sum",
    "svd_small",
    "transpose",
    "verification_mode",
]
