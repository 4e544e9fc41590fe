"""Backend selection for the numeric kernels.

Set ``TILESPARSE_BACKEND=numpy`` (or ``TILESPARSE_DISABLE_NUMBA=1``) before
import to force the pure-numpy kernels.  Without numba installed the numpy
kernels are used regardless.
"""
import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False


def _requested_backend():
    if os.environ.get("TILESPARSE_DISABLE_NUMBA", "").strip() not in ("", "0"):
        return "numpy"
    value = os.environ.get("TILESPARSE_BACKEND", "numba").strip().lower()
    if value not in ("numba", "numpy"):
        raise ValueError(f"TILESPARSE_BACKEND must be 'numba' or 'numpy', got {value!r}")
    return value


BACKEND = _requested_backend()
if BACKEND == "numba" and not NUMBA_AVAILABLE:  # pragma: no cover
    BACKEND = "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with caching and nogil on, or identity when numba is missing."""
    if not NUMBA_AVAILABLE:  # pragma: no cover
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return numba.njit(*args, **kwargs)
