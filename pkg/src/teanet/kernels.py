"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy versions.
Set ``TEANET_PURE_PYTHON=1`` to force the fallback.
"""

import os

from teanet import _kernels_py

if os.environ.get("TEANET_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from teanet import _kernels_c as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

unfold = _impl.unfold
fold = _impl.fold
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward

__all__ = ["BACKEND", "unfold", "fold", "maxpool_forward", "maxpool_backward"]
