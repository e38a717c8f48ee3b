"""Compare the compiled kernels with the numpy fallback.

Times each kernel on model-sized arrays, then one training step of a small
model with each backend swapped in.  Run from the repo root::

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from teanet import _kernels_py, kernels
from teanet.autodiff import Tape, Tensor, backward, sparse_cross_entropy
from teanet.model import TeanetConfig, build_teanet
from teanet.training import RMSprop

try:
    from teanet import _kernels_c
except ImportError:
    _kernels_c = None

KERNELS = ("unfold", "fold", "maxpool_forward", "maxpool_backward")


def kernel_cases(rng):
    """(label, kernel name, args) on shapes the network actually sees."""
    cases = []
    for n, length, c, k, s in [(32, 1924, 1, 5, 4), (32, 248, 32, 9, 1), (32, 242, 64, 3, 1)]:
        xp = rng.standard_normal((n, length, c))
        lout = (length - k) // s + 1
        cols = _kernels_py.unfold(xp, k, s, lout)
        cases.append((f"unfold  N={n} L={length} C={c} k={k} s={s}", "unfold", (xp, k, s, lout)))
        cases.append((f"fold    N={n} L={length} C={c} k={k} s={s}", "fold",
                      (np.ascontiguousarray(cols), s, length)))
    for n, length, c, p, s in [(32, 480, 32, 2, 2), (32, 241, 64, 2, 1)]:
        xp = rng.standard_normal((n, length, c))
        lout = (length - p) // s + 1
        _, arg = _kernels_py.maxpool_forward(xp, p, s, lout)
        g = rng.standard_normal((n, lout, c))
        cases.append((f"maxpool fwd N={n} L={length} C={c} p={p} s={s}", "maxpool_forward",
                      (xp, p, s, lout)))
        cases.append((f"maxpool bwd N={n} L={length} C={c} p={p} s={s}", "maxpool_backward",
                      (g, arg, length, s)))
    return cases


def best_of(fn, repeat, number=3):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def train_step_time(backend, repeat):
    for name in KERNELS:
        setattr(kernels, name, getattr(backend, name))
    model = build_teanet(TeanetConfig(tea_layers=2, width_divisor=4, seed=0))
    rng = np.random.default_rng(0)
    x = Tensor(rng.standard_normal((32, 1920, 1)))
    y = rng.integers(0, 2, 32)
    opt = RMSprop(model.parameters())

    def step():
        with Tape() as tape:
            loss = sparse_cross_entropy(model.forward(x, training=True, rng=rng), y)
        backward(tape, loss)
        opt.step()

    step()
    return best_of(step, repeat, number=1)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels_c is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':44s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, name, case_args in kernel_cases(rng):
        py = best_of(lambda: getattr(_kernels_py, name)(*case_args), args.repeat)
        c = best_of(lambda: getattr(_kernels_c, name)(*case_args), args.repeat)
        print(f"{label:44s} {py * 1e3:10.3f} {c * 1e3:10.3f} {py / c:7.1f}x")
    original = {name: getattr(kernels, name) for name in KERNELS}
    try:
        py = train_step_time(_kernels_py, args.repeat)
        c = train_step_time(_kernels_c, args.repeat)
    finally:
        for name, fn in original.items():
            setattr(kernels, name, fn)
    print(f"{'train step, TEA-2 /4, batch 32':44s} {py * 1e3:10.1f} {c * 1e3:10.1f} "
          f"{py / c:7.1f}x")


if __name__ == "__main__":
    main()
