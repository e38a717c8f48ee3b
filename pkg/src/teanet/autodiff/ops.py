"""Layer operations with forward and backward passes.

Every op takes and returns :class:`Tensor` objects.  Feature maps are
(batch, time, channels).  Gradients are recorded on the active :class:`Tape`.
"""

import math
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from teanet import kernels
from teanet.autodiff.tape import Tensor, record
from teanet.errors import ConfigError, ShapeError

PADDINGS = ("valid", "same")

_kinks = threading.local()


@contextmanager
def capture_kinks():
    """Collect the ReLU masks and maxpool argmax indices produced inside the block.

    Two forward passes with equal captures are on the same linear piece, which
    is what finite-difference gradient checks need.
    """
    prev = getattr(_kinks, "log", None)
    _kinks.log = []
    try:
        yield _kinks.log
    finally:
        _kinks.log = prev


def _log_kink(a):
    log = getattr(_kinks, "log", None)
    if log is not None:
        log.append(a)


def _check3(x, what="input"):
    if x.data.ndim != 3:
        raise ShapeError(f"{what} must be (batch, time, channels)", "3 dims", x.data.ndim)
    if min(x.data.shape) < 1:
        raise ShapeError(f"{what} has an empty dimension", "all dims >= 1", x.data.shape)


def _check_window(size, stride, padding, kind):
    if size <= 0 or stride <= 0:
        raise ConfigError(f"{kind} size and stride must be positive, got {size} and {stride}")
    if padding not in PADDINGS:
        raise ConfigError(f"padding must be one of {PADDINGS}, got {padding!r}")


def output_length(length, size, stride, padding):
    """Output length of a strided window op (conv or pool)."""
    if padding == "same":
        return -(-length // stride)
    return (length - size) // stride + 1


def window_geometry(length, size, stride, padding):
    """Return ``(lout, pad_left, pad_right)``; odd padding goes on the right."""
    lout = output_length(length, size, stride, padding)
    if padding == "same":
        total = max((lout - 1) * stride + size - length, 0)
        return lout, total // 2, total - total // 2
    return lout, 0, 0


def _pad_time(a, left, right, value=0.0):
    if left == 0 and right == 0:
        return np.ascontiguousarray(a)
    return np.pad(a, ((0, 0), (left, right), (0, 0)), constant_values=value)


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class ConvSpec:
    """Hyperparameters and parameters of a 1D (transposed) convolution.

    Regular convolutions store weights as ``(k, c_in, filters)``; transposed
    ones as ``(k, filters, c_in)`` so the same array drives both a
    convolution and its adjoint.
    """

    kernel_size: int
    stride: int
    padding: str
    filters: int
    weights: Tensor
    bias: Tensor
    transpose: bool = False

    def __post_init__(self):
        _check_window(self.kernel_size, self.stride, self.padding, "kernel")
        if self.filters <= 0:
            raise ConfigError(f"filters must be positive, got {self.filters}")

    @property
    def in_channels(self):
        return self.weights.data.shape[2 if self.transpose else 1]

    @classmethod
    def create(cls, in_channels, filters, kernel_size, stride=1, padding="same",
               rng=None, transpose=False, name="conv"):
        rng = np.random.default_rng() if rng is None else rng
        if transpose:
            shape = (kernel_size, filters, in_channels)
        else:
            shape = (kernel_size, in_channels, filters)
        w = glorot_uniform(rng, shape, kernel_size * in_channels, kernel_size * filters)
        return cls(kernel_size, stride, padding, filters,
                   Tensor(w, requires_grad=True, name=f"{name}.kernel"),
                   Tensor(np.zeros(filters), requires_grad=True, name=f"{name}.bias"),
                   transpose=transpose)

    def parameters(self):
        return [self.weights, self.bias]


@dataclass
class PoolSpec:
    pool_size: int
    stride: int
    padding: str = "same"

    def __post_init__(self):
        _check_window(self.pool_size, self.stride, self.padding, "pool")


@dataclass
class BatchNormParams:
    """Per-channel scale/shift plus running statistics.

    Running statistics are plain arrays updated in place by train-mode calls.
    ``last_mean``/``last_var`` keep the statistics of the most recent batch.
    """

    scale: Tensor
    shift: Tensor
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-3
    momentum: float = 0.99
    last_mean: np.ndarray = field(default=None, repr=False)
    last_var: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError(f"batchnorm eps must be > 0, got {self.eps}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"batchnorm momentum must be in [0, 1), got {self.momentum}")

    @classmethod
    def create(cls, channels, eps=1e-3, momentum=0.99, name="bn"):
        return cls(Tensor(np.ones(channels), requires_grad=True, name=f"{name}.scale"),
                   Tensor(np.zeros(channels), requires_grad=True, name=f"{name}.shift"),
                   np.zeros(channels), np.ones(channels), eps=eps, momentum=momentum)

    @property
    def channels(self):
        return self.scale.data.shape[0]

    def parameters(self):
        return [self.scale, self.shift]


def conv1d(x, spec):
    """Strided 1D convolution, ``y[n,j,f] = sum_t,c w[t,c,f] * xpad[n, j*s+t, c] + b[f]``."""
    _check3(x)
    if spec.transpose:
        raise ConfigError("conv1d given a transposed ConvSpec; use conv1d_transpose")
    n, length, c = x.data.shape
    k, s = spec.kernel_size, spec.stride
    if c != spec.in_channels:
        raise ShapeError("conv1d channel mismatch", spec.in_channels, c)
    if spec.padding == "valid" and length < k:
        raise ShapeError("valid conv1d input shorter than kernel", f"length >= {k}", length)
    lout, left, right = window_geometry(length, k, s, spec.padding)
    f = spec.filters
    xp = _pad_time(x.data, left, right)
    cols = kernels.unfold(xp, k, s, lout).reshape(n * lout, k * c)
    w2 = spec.weights.data.reshape(k * c, f)
    y = (cols @ w2 + spec.bias.data).reshape(n, lout, f)
    out = Tensor(y)

    def backward(g):
        g2 = g.reshape(n * lout, f)
        dw = (cols.T @ g2).reshape(k, c, f)
        db = g2.sum(axis=0)
        dx = None
        if x.requires_grad:
            dcols = (g2 @ w2.T).reshape(n, lout, k, c)
            dx = kernels.fold(dcols, s, xp.shape[1])[:, left:left + length]
        return dx, dw, db

    return record(out, (x, spec.weights, spec.bias), backward)


def transpose_output_length(length, kernel_size, stride, padding):
    if padding == "same":
        return length * stride
    return (length - 1) * stride + kernel_size


def conv1d_transpose(x, spec):
    """Fractionally strided convolution: the adjoint of :func:`conv1d` plus a bias.

    With stride 1 and same padding the time length is unchanged.
    """
    _check3(x)
    if not spec.transpose:
        raise ConfigError("conv1d_transpose needs a ConvSpec created with transpose=True")
    n, length, c = x.data.shape
    k, s, f = spec.kernel_size, spec.stride, spec.filters
    if c != spec.in_channels:
        raise ShapeError("conv1d_transpose channel mismatch", spec.in_channels, c)
    lo = transpose_output_length(length, k, s, spec.padding)
    lout, left, right = window_geometry(lo, k, s, spec.padding)
    if lout != length:
        raise ShapeError("conv1d_transpose geometry", length, lout)
    lp = lo + left + right
    w2 = spec.weights.data.reshape(k * f, c)
    x2 = x.data.reshape(n * length, c)
    cols = (x2 @ w2.T).reshape(n, length, k, f)
    y = kernels.fold(cols, s, lp)[:, left:left + lo] + spec.bias.data
    out = Tensor(y)

    def backward(g):
        gp = _pad_time(g, left, right)
        gcols = kernels.unfold(gp, k, s, length).reshape(n * length, k * f)
        dw = (gcols.T @ x2).reshape(k, f, c)
        db = g.sum(axis=(0, 1))
        dx = (gcols @ w2).reshape(n, length, c) if x.requires_grad else None
        return dx, dw, db

    return record(out, (x, spec.weights, spec.bias), backward)


def maxpool1d(x, spec):
    """Windowed max over time; ties send the gradient to the first index."""
    _check3(x)
    n, length, c = x.data.shape
    p, s = spec.pool_size, spec.stride
    if spec.padding == "valid" and length < p:
        raise ShapeError("valid maxpool input shorter than pool", f"length >= {p}", length)
    lout, left, right = window_geometry(length, p, s, spec.padding)
    xp = _pad_time(x.data, left, right, -np.inf)
    y, arg = kernels.maxpool_forward(xp, p, s, lout)
    _log_kink(arg)
    out = Tensor(y)

    def backward(g):
        g = np.ascontiguousarray(g)
        dxp = kernels.maxpool_backward(g, arg, xp.shape[1], s)
        return (dxp[:, left:left + length],)

    return record(out, (x,), backward)


def batchnorm(x, params, training=False):
    """Per-channel normalization over batch and time, then ``scale * xhat + shift``.

    Training mode uses batch statistics and updates the running ones;
    inference uses the running statistics only.
    """
    _check3(x)
    c = x.data.shape[2]
    if c != params.channels:
        raise ShapeError("batchnorm channel mismatch", params.channels, c)
    scale, shift = params.scale.data, params.shift.data
    if training:
        mean = x.data.mean(axis=(0, 1))
        var = x.data.var(axis=(0, 1))
        params.last_mean, params.last_var = mean, var
        m = params.momentum
        params.running_mean *= m
        params.running_mean += (1.0 - m) * mean
        params.running_var *= m
        params.running_var += (1.0 - m) * var
    else:
        mean, var = params.running_mean, params.running_var
    inv_std = 1.0 / np.sqrt(var + params.eps)
    xhat = (x.data - mean) * inv_std
    out = Tensor(xhat * scale + shift)

    def backward(g):
        dscale = (g * xhat).sum(axis=(0, 1))
        dshift = g.sum(axis=(0, 1))
        dx = None
        if x.requires_grad:
            dxhat = g * scale
            if training:
                count = x.data.shape[0] * x.data.shape[1]
                dx = (inv_std / count) * (
                    count * dxhat
                    - dxhat.sum(axis=(0, 1))
                    - xhat * (dxhat * xhat).sum(axis=(0, 1))
                )
            else:
                dx = dxhat * inv_std
        return dx, dscale, dshift

    return record(out, (x, params.scale, params.shift), backward)


def relu(x):
    mask = x.data > 0
    _log_kink(mask)
    # np.maximum keeps NaN visible so non-finite checks downstream can fire
    out = Tensor(np.maximum(x.data, 0.0))
    return record(out, (x,), lambda g: (g * mask,))


def concat_channels(xs):
    """Concatenate feature maps along the channel axis, in argument order."""
    if not xs:
        raise ShapeError("concat_channels needs at least one input", ">= 1 input", 0)
    for t in xs:
        _check3(t)
    n, length = xs[0].data.shape[:2]
    for i, t in enumerate(xs[1:], start=1):
        if t.data.shape[:2] != (n, length):
            raise ShapeError(f"concat_channels input {i} has mismatched batch/time",
                             (n, length), t.data.shape[:2])
    if len(xs) == 1:
        return xs[0]
    bounds = np.cumsum([0] + [t.data.shape[2] for t in xs])
    out = Tensor(np.concatenate([t.data for t in xs], axis=2))

    def backward(g):
        return tuple(g[:, :, a:b] for a, b in zip(bounds[:-1], bounds[1:]))

    return record(out, tuple(xs), backward)


def global_avg_pool(x):
    """Mean over time, keeping a length-1 time axis."""
    _check3(x)
    length = x.data.shape[1]
    out = Tensor(x.data.mean(axis=1, keepdims=True))
    return record(out, (x,), lambda g: (np.broadcast_to(g / length, x.data.shape).copy(),))


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def dense_softmax(x, weights, bias):
    """Flatten to (batch, features), apply ``x @ W + b`` and a row softmax."""
    n = x.data.shape[0]
    xf = x.data.reshape(n, -1)
    if xf.shape[1] != weights.data.shape[0]:
        raise ShapeError("dense input width", weights.data.shape[0], xf.shape[1])
    p = softmax(xf @ weights.data + bias.data)
    out = Tensor(p)

    def backward(g):
        dlogits = p * (g - (g * p).sum(axis=1, keepdims=True))
        dw = xf.T @ dlogits
        db = dlogits.sum(axis=0)
        dx = (dlogits @ weights.data.T).reshape(x.data.shape) if x.requires_grad else None
        return dx, dw, db

    return record(out, (x, weights, bias), backward)


def dropout(x, rate, training=False, rng=None):
    """Inverted dropout: survivors are scaled by ``1/(1-rate)``; identity at inference."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("train-mode dropout needs a random generator")
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    out = Tensor(x.data * mask)
    return record(out, (x,), lambda g: (g * mask,))


def sparse_cross_entropy(probs, labels, clamp=1e-12):
    """Batch mean of ``-log p[i, label_i]`` with probabilities clamped below at ``clamp``."""
    labels = np.asarray(labels)
    p = probs.data
    if p.ndim != 2:
        raise ShapeError("cross entropy expects (batch, classes) probabilities", 2, p.ndim)
    if labels.shape != (p.shape[0],):
        raise ShapeError("label count", p.shape[0], labels.shape)
    if not np.issubdtype(labels.dtype, np.integer) or labels.min() < 0 or labels.max() >= p.shape[1]:
        raise ShapeError("labels must be integer class indices", f"0..{p.shape[1] - 1}", labels)
    n = p.shape[0]
    rows = np.arange(n)
    picked = p[rows, labels]
    clamped = np.maximum(picked, clamp)
    out = Tensor(np.mean(-np.log(clamped)))

    def backward(g):
        dp = np.zeros_like(p)
        dp[rows, labels] = np.where(picked >= clamp, -1.0 / (n * clamped), 0.0)
        return (dp * g,)

    return record(out, (probs,), backward)


def weighted_sum(x, weights=None):
    """``sum(x * weights)`` (plain sum when ``weights`` is None) as a scalar tensor."""
    w = np.ones_like(x.data) if weights is None else np.asarray(weights, dtype=np.float64)
    out = Tensor(np.sum(x.data * w))
    return record(out, (x,), lambda g: (g * w,))
