"""Minimal reverse-mode differentiation engine for 1D convolutional networks."""

from teanet.autodiff.ops import (
    BatchNormParams,
    ConvSpec,
    PoolSpec,
    batchnorm,
    concat_channels,
    conv1d,
    conv1d_transpose,
    dense_softmax,
    dropout,
    global_avg_pool,
    maxpool1d,
    output_length,
    relu,
    softmax,
    sparse_cross_entropy,
    weighted_sum,
)
from teanet.autodiff.tape import Tape, Tensor, backward
from teanet.autodiff.weights import load_weights, save_weights

__all__ = [
    "BatchNormParams", "ConvSpec", "PoolSpec", "Tape", "Tensor", "backward",
    "batchnorm", "concat_channels", "conv1d", "conv1d_transpose", "dense_softmax",
    "dropout", "global_avg_pool", "load_weights", "maxpool1d", "output_length",
    "relu", "save_weights", "softmax", "sparse_cross_entropy", "weighted_sum",
]
