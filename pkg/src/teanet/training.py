"""RMSprop, sparse cross-entropy and the mini-batch training loop."""

import logging
from dataclasses import asdict, dataclass

import numpy as np

from teanet.autodiff import Tape, backward, sparse_cross_entropy
from teanet.errors import ConfigError, DataError, NumericError
from teanet.rng import stream

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-12


def ce_loss(probs, labels):
    """Mean sparse categorical cross-entropy of (N, 2) probabilities against 0/1 labels."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.size and (not np.issubdtype(labels.dtype, np.integer)
                        or labels.min() < 0 or labels.max() > 1):
        raise DataError(f"labels must be 0 or 1, got {np.unique(labels)}")
    picked = probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(np.maximum(picked, PROB_CLAMP))))


@dataclass
class RmspropState:
    """Moving average of squared gradients for one parameter."""

    accumulator: np.ndarray
    decay: float = 0.9
    learning_rate: float = 1e-3
    epsilon: float = 1e-7

    def __post_init__(self):
        if not 0.0 < self.decay < 1.0:
            raise ConfigError(f"decay must be in (0, 1), got {self.decay}")
        if self.learning_rate < 0:
            raise ConfigError(f"learning rate must be >= 0, got {self.learning_rate}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        self.accumulator = np.asarray(self.accumulator, dtype=np.float64)


def rmsprop_step(state, theta, grad):
    """One update, in place when ``theta`` is an array.

    ``E <- decay * E + (1 - decay) * g**2`` then
    ``theta <- theta - lr * g / sqrt(E + epsilon)``.  Returns ``(state, theta)``.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if np.shape(theta) != grad.shape or state.accumulator.shape != grad.shape:
        raise DataError(f"shape mismatch: theta {np.shape(theta)}, grad {grad.shape}, "
                        f"accumulator {state.accumulator.shape}")
    acc = state.accumulator
    acc *= state.decay
    acc += (1.0 - state.decay) * grad * grad
    step = state.learning_rate * grad / np.sqrt(acc + state.epsilon)
    if isinstance(theta, np.ndarray):
        theta -= step
    else:
        theta = theta - step
    return state, theta


class RMSprop:
    def __init__(self, params, learning_rate=1e-3, decay=0.9, epsilon=1e-7):
        self.params = list(params)
        self.states = [RmspropState(np.zeros_like(p.data), decay, learning_rate, epsilon)
                       for p in self.params]

    def step(self):
        for p, state in zip(self.params, self.states):
            if p.grad is not None:
                rmsprop_step(state, p.data, p.grad)


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    decay: float = 0.9
    epsilon: float = 1e-7
    seed: int = 0
    patience: int = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience is not None and self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        RmspropState(np.zeros(1), self.decay, self.learning_rate, self.epsilon)

    def to_dict(self):
        return asdict(self)


@dataclass
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


def stack_segments(segments):
    x = np.stack([np.asarray(s.values, dtype=np.float64) for s in segments])[:, :, None]
    y = np.array([s.label for s in segments], dtype=np.int64)
    return x, y


def first_nonfinite_layer(model, x):
    """Path of the first layer whose train-mode output is not finite, or None."""
    trace = []
    model.forward(x, training=True, rng=np.random.default_rng(0), trace=trace)
    for path, out in trace:
        if not np.all(np.isfinite(out.data)):
            return path
    return None


def fit(model, segments, config=None, fold=None):
    """Train ``model`` in place on ``segments``; returns ``(model, trace)``.

    ``fold`` salts the shuffle and dropout streams so parallel folds sharing
    one seed still draw independent batches.
    """
    config = TrainConfig() if config is None else config
    if not segments:
        raise DataError("training set is empty")
    x, y = stack_segments(segments)
    extra = () if fold is None else (fold,)
    shuffle_rng = stream(config.seed, "shuffle", *extra)
    dropout_rng = stream(config.seed, "dropout", *extra)
    opt = RMSprop(model.parameters(), config.learning_rate, config.decay, config.epsilon)
    model.train()
    trace, best, stale = [], np.inf, 0
    n = len(y)
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        total_loss, correct = 0.0, 0
        for a in range(0, n, config.batch_size):
            idx = order[a:a + config.batch_size]
            xb, yb = x[idx], y[idx]
            with Tape() as tape:
                probs = model.forward(xb, training=True, rng=dropout_rng)
                loss = sparse_cross_entropy(probs, yb, clamp=PROB_CLAMP)
            value = float(loss.data)
            if not np.isfinite(value):
                layer = first_nonfinite_layer(model, xb)
                model.eval()
                raise NumericError(
                    f"non-finite loss at epoch {epoch}; first bad layer: {layer or 'loss'}",
                    layer=layer)
            backward(tape, loss)
            opt.step()
            total_loss += value * len(idx)
            correct += int(np.sum(np.argmax(probs.data, axis=1) == yb))
        stats = EpochStats(epoch, total_loss / n, correct / n)
        trace.append(stats)
        log.debug("epoch %d loss %.6f acc %.4f", epoch, stats.loss, stats.accuracy)
        if config.patience is not None:
            if stats.loss < best - 1e-12:
                best, stale = stats.loss, 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    model.eval()
    return model, trace


def format_trace(trace):
    lines = ["epoch\tloss\taccuracy"]
    lines += [f"{s.epoch}\t{s.loss:.6f}\t{s.accuracy:.4f}" for s in trace]
    return "\n".join(lines) + "\n"
