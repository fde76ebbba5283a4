"""Numba switch shared by the hot kernels.

Every kernel in :mod:`svrec.kernels` exists twice: a loop version compiled
with ``@njit`` and a vectorised numpy version. ``SVREC_NUMBA=0`` in the
environment selects the numpy versions at import time.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

_FLAG = os.environ.get("SVREC_NUMBA", "1").strip().lower()

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("0", "false", "no", "off")


def njit(func):
    """Compile ``func`` in nopython mode, or return it untouched without numba."""
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)
