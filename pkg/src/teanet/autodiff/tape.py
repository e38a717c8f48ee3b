"""Tensor value type and the recording tape used for reverse-mode gradients."""

import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from teanet.errors import UsageError

_local = threading.local()


class Tensor:
    """A float64 array that may take part in gradient computation.

    Layer tensors are (batch, time, channels); parameters and the classifier
    output use whatever shape they need.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "__weakref__")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def numpy(self):
        return self.data

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class _Record:
    output: Tensor
    inputs: Sequence
    backward: Callable


class Tape:
    """Records differentiable operations while active.

    Use as a context manager around the forward pass, then call
    :func:`backward` with the scalar loss.  Tapes are per thread.
    """

    def __init__(self):
        self.records = []

    def __enter__(self):
        _stack().append(self)
        return self

    def __exit__(self, *exc):
        _stack().pop()
        return False

    def record(self, output, inputs, backward_fn):
        self.records.append(_Record(output, tuple(inputs), backward_fn))

    def parameters(self):
        """Leaf tensors requiring gradients, in first-use order."""
        produced = {id(r.output) for r in self.records}
        seen, out = set(), []
        for r in self.records:
            for t in r.inputs:
                if t is None or not t.requires_grad:
                    continue
                if id(t) in produced or id(t) in seen:
                    continue
                seen.add(id(t))
                out.append(t)
        return out


def _stack():
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def active_tape():
    stack = _stack()
    return stack[-1] if stack else None


def record(output, inputs, backward_fn):
    """Attach ``output`` to the active tape if any input needs a gradient.

    ``backward_fn`` maps the output gradient to a tuple with one entry per
    input (``None`` where no gradient flows).
    """
    if any(t is not None and t.requires_grad for t in inputs):
        output.requires_grad = True
        tape = active_tape()
        if tape is not None:
            tape.record(output, inputs, backward_fn)
    return output


def backward(tape, loss):
    """Propagate d(loss)/d(.) through ``tape`` in reverse recording order.

    Every leaf parameter reached gets its ``.grad`` overwritten.  Returns a
    dict mapping those parameters to their gradient arrays.
    """
    if not tape.records:
        raise UsageError("backward called on an empty tape; run the forward pass first")
    if loss.data.size != 1:
        raise UsageError(f"loss must be a scalar, got shape {loss.shape}")
    if not any(r.output is loss for r in tape.records):
        raise UsageError("loss was not produced on this tape")

    grads = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape.records):
        g = grads.pop(id(rec.output), None)
        if g is None:
            continue
        in_grads = rec.backward(g)
        for t, gi in zip(rec.inputs, in_grads):
            if t is None or gi is None or not t.requires_grad:
                continue
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi

    result = {}
    for t in tape.parameters():
        g = grads.get(id(t))
        if g is None:
            g = np.zeros_like(t.data)
        t.grad = g
        result[t] = g
    return result
