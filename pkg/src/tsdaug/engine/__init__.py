"""Minimal differentiable-tensor engine used by all three model families."""

from tsdaug.engine.checkpoint import file_sha256, load_checkpoint, save_checkpoint
from tsdaug.engine.kernels import BACKEND
from tsdaug.engine.optim import Adam
from tsdaug.engine.params import ParamSet, glorot_uniform
from tsdaug.engine.tensor import (
    Tensor,
    add,
    backward,
    broadcast_length,
    concat_channels,
    conv1d,
    dense,
    flatten,
    maxpool1d,
    mse,
    relu,
    scale,
    set_verification,
    softmax_ce,
    softmax_probs,
    tanh,
    upsample_nearest,
    verification_enabled,
)

__all__ = [
    "Adam",
    "BACKEND",
    "ParamSet",
    "Tensor",
    "add",
    "backward",
    "broadcast_length",
    "concat_channels",
    "conv1d",
    "dense",
    "file_sha256",
    "flatten",
    "glorot_uniform",
    "load_checkpoint",
    "maxpool1d",
    "mse",
    "relu",
    "save_checkpoint",
    "scale",
    "set_verification",
    "softmax_ce",
    "softmax_probs",
    "tanh",
    "upsample_nearest",
    "verification_enabled",
]
