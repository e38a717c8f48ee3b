"""Pure numpy implementations of the sliding-window kernels.

These are the reference versions; ``_kernels_c`` must match them exactly.
All arrays are float64, laid out as (batch, time, channels).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def unfold(xp, k, s, lout):
    """Gather strided windows: ``cols[n, j, t, c] = xp[n, j*s + t, c]``."""
    win = sliding_window_view(xp, k, axis=1)[:, : (lout - 1) * s + 1 : s]
    return np.ascontiguousarray(win.transpose(0, 1, 3, 2))


def fold(cols, s, lp):
    """Scatter-add adjoint of :func:`unfold` into a length ``lp`` buffer."""
    n, lout, k, c = cols.shape
    out = np.zeros((n, lp, c))
    stop = (lout - 1) * s + 1
    for t in range(k):
        out[:, t : t + stop : s] += cols[:, :, t]
    return out


def maxpool_forward(xp, p, s, lout):
    """Windowed max; also returns the absolute time index of the first maximum."""
    win = sliding_window_view(xp, p, axis=1)[:, : (lout - 1) * s + 1 : s]
    arg = np.argmax(win, axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    arg += (np.arange(lout) * s)[None, :, None]
    return np.ascontiguousarray(out), arg.astype(np.int64)


def maxpool_backward(g, arg, lp, s):
    """Route each pooled gradient to the index chosen in the forward pass."""
    n, lout, c = g.shape
    out = np.zeros((n, lp, c))
    rel = arg - (np.arange(lout) * s)[None, :, None]
    stop = (lout - 1) * s + 1
    for t in range(int(rel.max()) + 1):
        out[:, t : t + stop : s] += np.where(rel == t, g, 0.0)
    return out
