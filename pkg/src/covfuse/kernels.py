"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``COVFUSE_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy implementations are used.  ``BACKEND`` names the choice.
"""
import os

from . import _pykernels

_force_py = os.environ.get("COVFUSE_PURE_PYTHON", "") not in ("", "0")

if _force_py:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

rank1_lmax = _impl.rank1_lmax
min_inflation = _impl.min_inflation
shape_scales = _impl.shape_scales
gcu_objective = _impl.gcu_objective
logdet_barrier = _impl.logdet_barrier
shape_factor = _pykernels.shape_factor

__all__ = [
    "BACKEND",
    "rank1_lmax",
    "min_inflation",
    "shape_scales",
    "gcu_objective",
    "logdet_barrier",
    "shape_factor",
]
