"""Block builders and the assembled network.

All convolutions and pools inside the TEA layers use same padding with
stride 1 so every path keeps the time length and the channel-wise
concatenations line up for any number of stacked layers.
"""

import numpy as np

from teanet.autodiff import ops
from teanet.autodiff.tape import Tensor
from teanet.autodiff.weights import load_weights, save_weights
from teanet.errors import ConfigError, DataError, ShapeError
from teanet.model.config import TeanetConfig
from teanet.model.layers import (
    BatchNorm,
    Concat,
    Conv,
    DenseSoftmax,
    Dropout,
    ForwardContext,
    GlobalAvgPool,
    MaxPool,
    ReLU,
    Sequential,
)
from teanet.rng import stream

INPUT_LENGTH = 1920
DSB_FILTERS = 128
AB_FILTERS = (96, 16, 32)
CLASSIFIER_FILTERS = (96, 64, 32)
FEATURE_TAP = "classifier.block3.pool"


class _Builder:
    """Carries the init generator and width/batchnorm settings through the build."""

    def __init__(self, rng, width_divisor=1, bn_momentum=0.99, bn_eps=1e-3):
        self.rng = rng
        self.width_divisor = width_divisor
        self.bn_momentum = bn_momentum
        self.bn_eps = bn_eps

    def width(self, filters):
        return max(1, round(filters / self.width_divisor))

    def conv(self, c_in, filters, k, stride=1, transpose=False):
        return Conv(ops.ConvSpec.create(c_in, filters, k, stride, "same",
                                        rng=self.rng, transpose=transpose))

    def bn(self, channels):
        return BatchNorm(ops.BatchNormParams.create(channels, self.bn_eps, self.bn_momentum))


def _default_builder(builder):
    return _Builder(np.random.default_rng(0)) if builder is None else builder


def build_dsb(in_channels=1, builder=None):
    """Conv(k=5, s=4) -> MaxPool(2, 2) -> BatchNorm -> ReLU; length / 8."""
    b = _default_builder(builder)
    f = b.width(DSB_FILTERS)
    return Sequential([
        ("conv", b.conv(in_channels, f, 5, stride=4)),
        ("pool", MaxPool(ops.PoolSpec(2, 2, "same"))),
        ("bn", b.bn(f)),
        ("relu", ReLU()),
    ], out_channels=f)


def _two_conv_path(b, c_in, first, second, k_first, k_second, transpose):
    return Sequential([
        ("conv1", b.conv(c_in, first, k_first, transpose=transpose)),
        ("relu1", ReLU()),
        ("conv2", b.conv(first, second, k_second, transpose=transpose)),
        ("relu2", ReLU()),
    ], out_channels=second)


def _pointwise_path(b, c_in, filters, transpose):
    return Sequential([
        ("conv", b.conv(c_in, filters, 1, transpose=transpose)),
        ("relu", ReLU()),
    ], out_channels=filters)


def build_cb(triple, in_channels, builder=None):
    """Convolutional block: squeeze-expand, expand-squeeze and pointwise paths, concatenated."""
    b = _default_builder(builder)
    return Concat([
        ("squeeze_expand", _two_conv_path(b, in_channels, triple.squeeze, triple.expand_out,
                                          3, 9, False)),
        ("expand_squeeze", _two_conv_path(b, in_channels, triple.expand, triple.squeeze_out,
                                          9, 3, False)),
        ("pointwise", _pointwise_path(b, in_channels, triple.pointwise, False)),
    ])


def build_tcb(triple, in_channels, builder=None):
    """Transposed convolutional block: same topology as :func:`build_cb` with transposed convs."""
    b = _default_builder(builder)
    return Concat([
        ("pointwise", _pointwise_path(b, in_channels, triple.pointwise, True)),
        ("expand_squeeze", _two_conv_path(b, in_channels, triple.expand, triple.squeeze_out,
                                          9, 3, True)),
        ("squeeze_expand", _two_conv_path(b, in_channels, triple.squeeze, triple.expand_out,
                                          3, 9, True)),
    ])


def build_ab(in_channels, builder=None):
    """Autoencoder block: three Conv(k=3) -> ReLU -> MaxPool(2, stride 1) stages."""
    b = _default_builder(builder)
    layers, c = [], in_channels
    for i, filters in enumerate(AB_FILTERS, start=1):
        f = b.width(filters)
        layers.append((f"stage{i}", Sequential([
            ("conv", b.conv(c, f, 3)),
            ("relu", ReLU()),
            ("pool", MaxPool(ops.PoolSpec(2, 1, "same"))),
        ], out_channels=f)))
        c = f
    return Sequential(layers, out_channels=c)


def build_conv_path(layer_index, config, in_channels, builder):
    cb1 = build_cb(config.triple(layer_index, "cb1"), in_channels, builder)
    cb2 = build_cb(config.triple(layer_index, "cb2"), cb1.out_channels, builder)
    return Sequential([
        ("cb1", cb1),
        ("bn1", builder.bn(cb1.out_channels)),
        ("cb2", cb2),
        ("bn2", builder.bn(cb2.out_channels)),
    ], out_channels=cb2.out_channels)


def build_te_path(layer_index, config, in_channels, builder, use_tcb=True, use_ab=True):
    layers, c = [], in_channels
    if use_tcb:
        tcb = build_tcb(config.triple(layer_index, "tcb"), c, builder)
        layers.append(("tcb", tcb))
        c = tcb.out_channels
    cb3 = build_cb(config.triple(layer_index, "cb3"), c, builder)
    layers.append(("cb3", cb3))
    c = cb3.out_channels
    if use_ab:
        ab1 = build_ab(c, builder)
        layers.append(("ab1", ab1))
        c = ab1.out_channels
    cb4 = build_cb(config.triple(layer_index, "cb4"), c, builder)
    c = cb4.out_channels
    layers += [
        ("cb4", cb4),
        ("bn", builder.bn(c)),
        ("match", builder.conv(c, c, 1)),
        ("relu", ReLU()),
    ]
    if use_ab:
        ab2 = build_ab(c, builder)
        layers.append(("ab2", ab2))
        c = ab2.out_channels
    layers.append(("pool", MaxPool(ops.PoolSpec(2, 1, "same"))))
    return Sequential(layers, out_channels=c)


def build_tea_layer(layer_index, config, in_channels, builder=None):
    """One TEA layer: conv path and TE path on the same input, concatenated.

    Ablation variants keep only the paths (and TE-path parts) they name.
    """
    b = _default_builder(builder)
    v = config.variant
    branches = []
    if v in ("full", "conv_only"):
        branches.append(("conv_path", build_conv_path(layer_index, config, in_channels, b)))
    if v != "conv_only":
        branches.append(("te_path", build_te_path(
            layer_index, config, in_channels, b,
            use_tcb=v != "te_no_tcb", use_ab=v != "te_no_autoencoder")))
    return Concat(branches)


def build_classifier(in_channels, time_length, builder=None, dropout=0.3):
    """Three Conv -> ReLU -> MaxPool(2, 2) -> BatchNorm -> Dropout blocks, GAP, dense softmax."""
    if time_length < 8:
        raise ShapeError("classifier needs room for three halvings", "time length >= 8",
                         time_length)
    b = _default_builder(builder)
    layers, c = [], in_channels
    for i, filters in enumerate(CLASSIFIER_FILTERS, start=1):
        f = b.width(filters)
        layers.append((f"block{i}", Sequential([
            ("conv", b.conv(c, f, 3)),
            ("relu", ReLU()),
            ("pool", MaxPool(ops.PoolSpec(2, 2, "same"))),
            ("bn", b.bn(f)),
            ("dropout", Dropout(dropout)),
        ], out_channels=f)))
        c = f
    layers.append(("gap", GlobalAvgPool()))
    layers.append(("dense", DenseSoftmax(c, 2, b.rng)))
    return Sequential(layers, out_channels=2)


class Model:
    """The assembled network plus its config.

    ``training`` selects batch statistics and live dropout; inference-mode
    forward passes never mutate the model.
    """

    def __init__(self, config, root):
        self.config = config
        self.root = root
        self.training = False
        root.assign_paths("")

    def train(self):
        self.training = True
        return self

    def eval(self):
        self.training = False
        return self

    def forward(self, x, training=None, rng=None, trace=None):
        x = x if isinstance(x, Tensor) else Tensor(x)
        if x.data.ndim == 2:
            x = Tensor(x.data[:, :, None], x.requires_grad)
        training = self.training if training is None else training
        return self.root(x, ForwardContext(training=training, rng=rng, trace=trace))

    __call__ = forward

    def predict_proba(self, x, batch_size=64):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[:, :, None]
        out = [self.forward(x[i:i + batch_size], training=False).data
               for i in range(0, len(x), batch_size)]
        return np.concatenate(out) if out else np.zeros((0, 2))

    def block(self, path):
        layer = self.root
        for part in path.split("."):
            layer = layer[part]
        return layer

    def named_parameters(self):
        return list(self.root.named_parameters())

    def parameters(self):
        return [t for _, t in self.root.named_parameters()]

    def parameter_count(self):
        return int(sum(t.data.size for t in self.parameters()))

    def state_dict(self):
        state = {name: t.data for name, t in self.root.named_parameters()}
        state.update(self.root.named_buffers())
        return state

    def load_state_dict(self, state):
        params = dict(self.root.named_parameters())
        buffers = dict(self.root.named_buffers())
        expected = set(params) | set(buffers)
        if set(state) != expected:
            missing = sorted(expected - set(state))[:3]
            extra = sorted(set(state) - expected)[:3]
            raise DataError(f"weights do not match model (missing {missing}, unexpected {extra})")
        for name, t in params.items():
            if state[name].shape != t.data.shape:
                raise ShapeError(f"weight {name}", t.data.shape, state[name].shape)
            t.data = np.array(state[name], dtype=np.float64)
        for name, a in buffers.items():
            a[...] = state[name]

    def save(self, path):
        save_weights(path, self.state_dict(), meta={"config": self.config.to_dict()})

    @classmethod
    def load(cls, path):
        tensors, meta = load_weights(path)
        if "config" not in meta:
            raise DataError(f"{path}: weights file carries no model config")
        model = build_teanet(TeanetConfig.from_dict(meta["config"]))
        model.load_state_dict(tensors)
        return model


def build_teanet(config, fold=None):
    """Input -> DSB -> ``tea_layers`` TEA layers -> classifier, initialised from ``config.seed``.

    ``fold`` salts the init stream so each cross-validation fold starts fresh.
    """
    if not isinstance(config, TeanetConfig):
        raise ConfigError("build_teanet needs a TeanetConfig")
    extra = () if fold is None else (fold,)
    b = _Builder(stream(config.seed, "init", *extra), config.width_divisor,
                 config.bn_momentum, config.bn_eps)
    dsb = build_dsb(1, b)
    layers, c = [("dsb", dsb)], dsb.out_channels
    for i in range(1, config.tea_layers + 1):
        tea = build_tea_layer(i, config, c, b)
        layers.append((f"tea{i}", tea))
        c = tea.out_channels
    time_length = ops.output_length(ops.output_length(INPUT_LENGTH, 5, 4, "same"), 2, 2, "same")
    layers.append(("classifier", build_classifier(c, time_length, b, config.dropout)))
    return Model(config, Sequential(layers, out_channels=2))


def feature_maps(model, segment):
    """Activations at the last classifier conv stage, one row per filter.

    ``segment`` is a 1920-sample window (array or anything with ``.values``).
    """
    values = np.asarray(getattr(segment, "values", segment), dtype=np.float64).ravel()
    if values.size != INPUT_LENGTH:
        raise ShapeError("feature_maps segment length", INPUT_LENGTH, values.size)
    trace = []
    model.forward(values[None, :, None], training=False, trace=trace)
    for path, out in trace:
        if path == FEATURE_TAP:
            return out.data[0].T.copy()
    raise ShapeError("feature tap not found in model", FEATURE_TAP, None)
