"""Kernel backend selection.

``HEARDU_KERNELS=numba`` (default when numba imports) compiles the loop
kernels with ``@njit``; ``HEARDU_KERNELS=numpy`` forces the vectorised
numpy fallbacks. The flag is read once at import time.
"""

from __future__ import annotations

import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    NUMBA_AVAILABLE = False


def _requested_backend() -> str:
    value = os.environ.get("HEARDU_KERNELS", "").strip().lower()
    if value in ("numpy", "python", "0", "off", "false"):
        return "numpy"
    if value in ("", "numba", "1", "on", "true"):
        return "numba" if NUMBA_AVAILABLE else "numpy"
    raise ValueError(f"HEARDU_KERNELS must be 'numba' or 'numpy', got {value!r}")


KERNEL_BACKEND = _requested_backend()


def njit(fn):
    """Compile ``fn`` with numba when available; otherwise return it unchanged."""
    if NUMBA_AVAILABLE:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn
