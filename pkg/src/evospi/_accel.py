"""Switch between numba-compiled kernels and the pure-numpy fallback.

Set ``EVOSPI_DISABLE_JIT=1`` before import to force the numpy path.
"""
import logging
import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba

    HAVE_NUMBA = True
    logging.getLogger("numba").setLevel(logging.WARNING)
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

JIT_ENABLED = HAVE_NUMBA and os.environ.get("EVOSPI_DISABLE_JIT", "").strip().lower() in _FALSY


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)
