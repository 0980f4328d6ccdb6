"""Kernel backend selection.

The compiled extension is used when importable; setting ``OPTRTA_PURE_PYTHON=1``
forces the pure-Python kernels (useful for benchmarking and debugging).
"""

from __future__ import annotations

import os

from . import _pykernels

kernels = _pykernels
BACKEND = "python"

if not os.environ.get("OPTRTA_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"

__all__ = ["kernels", "BACKEND", "_pykernels"]
