"""Layer objects wrapping the autodiff ops, plus sequential/parallel containers."""

from dataclasses import dataclass

import numpy as np

from teanet.autodiff import ops
from teanet.autodiff.tape import Tensor


@dataclass
class ForwardContext:
    training: bool = False
    rng: np.random.Generator = None
    trace: list = None


class Layer:
    path = ""

    def forward(self, x, ctx):
        raise NotImplementedError

    def __call__(self, x, ctx=None):
        ctx = ForwardContext() if ctx is None else ctx
        out = self.forward(x, ctx)
        if ctx.trace is not None and not self.children():
            ctx.trace.append((self.path, out))
        return out

    def children(self):
        return ()

    def own_parameters(self):
        return ()

    def own_buffers(self):
        return ()

    def assign_paths(self, prefix):
        self.path = prefix
        for name, child in self.children():
            child.assign_paths(f"{prefix}.{name}" if prefix else name)
        for suffix, t in self.own_parameters():
            t.name = f"{prefix}.{suffix}"

    def walk(self):
        yield self
        for _, child in self.children():
            yield from child.walk()

    def named_parameters(self):
        for layer in self.walk():
            for suffix, t in layer.own_parameters():
                yield f"{layer.path}.{suffix}", t

    def named_buffers(self):
        for layer in self.walk():
            for suffix, a in layer.own_buffers():
                yield f"{layer.path}.{suffix}", a


class Conv(Layer):
    def __init__(self, spec):
        self.spec = spec

    @property
    def out_channels(self):
        return self.spec.filters

    def forward(self, x, ctx):
        if self.spec.transpose:
            return ops.conv1d_transpose(x, self.spec)
        return ops.conv1d(x, self.spec)

    def own_parameters(self):
        return (("kernel", self.spec.weights), ("bias", self.spec.bias))


class MaxPool(Layer):
    def __init__(self, spec):
        self.spec = spec

    def forward(self, x, ctx):
        return ops.maxpool1d(x, self.spec)


class BatchNorm(Layer):
    def __init__(self, params):
        self.params = params

    def forward(self, x, ctx):
        return ops.batchnorm(x, self.params, training=ctx.training)

    def own_parameters(self):
        return (("scale", self.params.scale), ("shift", self.params.shift))

    def own_buffers(self):
        return (("running_mean", self.params.running_mean),
                ("running_var", self.params.running_var))


class ReLU(Layer):
    def forward(self, x, ctx):
        return ops.relu(x)


class Dropout(Layer):
    def __init__(self, rate):
        self.rate = rate

    def forward(self, x, ctx):
        return ops.dropout(x, self.rate, training=ctx.training, rng=ctx.rng)


class GlobalAvgPool(Layer):
    def forward(self, x, ctx):
        return ops.global_avg_pool(x)


class DenseSoftmax(Layer):
    def __init__(self, in_features, classes, rng):
        w = ops.glorot_uniform(rng, (in_features, classes), in_features, classes)
        self.weights = Tensor(w, requires_grad=True)
        self.bias = Tensor(np.zeros(classes), requires_grad=True)

    def forward(self, x, ctx):
        return ops.dense_softmax(x, self.weights, self.bias)

    def own_parameters(self):
        return (("kernel", self.weights), ("bias", self.bias))


class Sequential(Layer):
    def __init__(self, layers, out_channels=None):
        self.layers = list(layers)
        self.out_channels = out_channels

    def children(self):
        return self.layers

    def __getitem__(self, name):
        for n, layer in self.layers:
            if n == name:
                return layer
        raise KeyError(name)

    def forward(self, x, ctx):
        for _, layer in self.layers:
            x = layer(x, ctx)
        return x


class Concat(Layer):
    """Runs every branch on the same input and concatenates along channels."""

    def __init__(self, branches):
        self.branches = list(branches)
        self.out_channels = sum(b.out_channels for _, b in self.branches)

    def children(self):
        return self.branches

    def __getitem__(self, name):
        for n, layer in self.branches:
            if n == name:
                return layer
        raise KeyError(name)

    def forward(self, x, ctx):
        return ops.concat_channels([b(x, ctx) for _, b in self.branches])
