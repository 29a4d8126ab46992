"""Kernel backend selection: compiled extension with pure-numpy fallback.

Selection is per kernel, following benchmarks/bench_kernels.py: the fused
per-mode implicit solve is ~2x faster compiled, while the block-weighted
reduction is a matrix-vector product that BLAS already wins, so it stays on
the numpy path.  Set CRITICALFLOW_PURE=1 to force the numpy fallback for
everything (debugging, benchmark baselines).
"""

import importlib
import os

from . import _ref

_core = None
if not os.environ.get("CRITICALFLOW_PURE"):
    try:
        _core = importlib.import_module("._core", __name__)
    except ImportError:
        _core = None

BACKEND = "cython" if _core is not None else "numpy"

implicit_acoustic_solve = (
    _core.implicit_acoustic_solve if _core is not None else _ref.implicit_acoustic_solve
)
block_l2_sq_profile = _ref.block_l2_sq_profile

__all__ = ["implicit_acoustic_solve", "block_l2_sq_profile", "BACKEND"]
