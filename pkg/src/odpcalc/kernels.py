"""Kernel backend selection.

The compiled extension is preferred; set ``ODPCALC_PURE=1`` to force the
numpy fallback.  ``BACKEND`` names the active implementation.
"""

import os

from . import _kernels_py

_compiled = None
if os.environ.get("ODPCALC_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py
BACKEND = "compiled" if _compiled is not None else "python"

box_distances = _impl.box_distances
normal_codes = _impl.normal_codes
min_norm_point = _impl.min_norm_point


def pivot(T, r, c):
    if _compiled is not None and T.flags.c_contiguous and T.dtype.kind == "f":
        _compiled.pivot(T, r, c)
    else:
        _kernels_py.pivot(T, r, c)
