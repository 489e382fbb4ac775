"""JIT switch for the hot kernels.

Numba is used when it imports cleanly and ``DRONEREM_DISABLE_NUMBA`` is not
set to a truthy value. Otherwise ``njit`` is a no-op and the kernels module
routes every call to its vectorized numpy twin.
"""
import os

_FLAG = "DRONEREM_DISABLE_NUMBA"


def _disabled():
    return os.environ.get(_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


try:
    if _disabled():
        raise ImportError(f"{_FLAG} set")
    import numba

    def njit(func):
        return numba.njit(cache=True, nogil=True)(func)

    HAVE_NUMBA = True
except ImportError:
    def njit(func):
        return func

    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"

__all__ = ["njit", "HAVE_NUMBA", "BACKEND"]
