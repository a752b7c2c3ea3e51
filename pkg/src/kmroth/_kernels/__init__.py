"""Kernel backend selection: compiled extension if present, numpy otherwise.

KM_PURE_PYTHON=1 forces the numpy fallback (used by the benchmark and by CI
environments without a compiler).
"""

import os

if os.environ.get("KM_PURE_PYTHON"):
    from . import pyref as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        from . import pyref as _impl

        BACKEND = "python"

conv_int64 = _impl.conv_int64
count_3aps_mask = _impl.count_3aps_mask

__all__ = ["BACKEND", "conv_int64", "count_3aps_mask"]
