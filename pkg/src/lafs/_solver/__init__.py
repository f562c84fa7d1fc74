"""Solver kernel selection: compiled extension if present, numpy fallback otherwise.

``LAFS_PURE_SOLVER=1`` in the environment forces the fallback (used by the
backend benchmark and for debugging).
"""

import os

from . import _dcd_py

if os.environ.get("LAFS_PURE_SOLVER") == "1":
    dcd_epoch = _dcd_py.dcd_epoch
    BACKEND = "pure"
else:
    try:
        from ._dcd import dcd_epoch

        BACKEND = "compiled"
    except ImportError:
        dcd_epoch = _dcd_py.dcd_epoch
        BACKEND = "pure"

__all__ = ["dcd_epoch", "BACKEND"]
