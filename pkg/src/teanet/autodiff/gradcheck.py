"""Central finite-difference checks for tape gradients."""

import numpy as np

from teanet.autodiff.ops import capture_kinks
from teanet.autodiff.tape import Tape, backward


def relative_error(analytic, numeric, floor=1e-8):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _same_pattern(a, b):
    return len(a) == len(b) and all(np.array_equal(u, v) for u, v in zip(a, b))


# Central differences carry roundoff of about eps * |loss| / h (~1e-12 at
# h=1e-4), so gradients that are exactly zero, such as a conv bias feeding a
# batchnorm, need a denominator floor well above that noise.
NOISE_FLOOR = 1e-7


def check_gradients(loss_fn, params, probes, rng, h=1e-4, max_resample=50, floor=NOISE_FLOOR):
    """Compare analytic and central-difference gradients at random entries.

    ``loss_fn`` must be deterministic and return a scalar Tensor.  Probes whose
    ±h perturbation crosses a ReLU or maxpool kink are redrawn.  Returns a list
    of ``(name, index, analytic, numeric, rel_error)``.
    """
    with Tape() as tape:
        loss = loss_fn()
    grads = backward(tape, loss)
    params = [p for p in params if p in grads]
    results = []
    redraws = 0
    while len(results) < probes:
        p = params[rng.integers(len(params))]
        idx = tuple(int(rng.integers(n)) for n in p.data.shape)
        old = p.data[idx]
        with capture_kinks() as base:
            loss_fn()
        p.data[idx] = old + h
        with capture_kinks() as up:
            lp = float(loss_fn().data)
        p.data[idx] = old - h
        with capture_kinks() as down:
            lm = float(loss_fn().data)
        p.data[idx] = old
        if not (_same_pattern(base, up) and _same_pattern(base, down)):
            redraws += 1
            if redraws > max_resample * probes:
                raise RuntimeError("too many probes landed on kinks")
            continue
        numeric = (lp - lm) / (2 * h)
        analytic = float(grads[p][idx])
        results.append((p.name, idx, analytic, numeric, relative_error(analytic, numeric, floor)))
    return results
