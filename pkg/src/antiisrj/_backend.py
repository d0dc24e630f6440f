"""Selects the compiled kernels when available, else the numpy fallback.

Set ``ANTIISRJ_BACKEND=python`` to force the fallback (useful for checking
that both paths agree).
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("ANTIISRJ_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

glwd_lag_sum = _impl.glwd_lag_sum
hough_vote = _impl.hough_vote
