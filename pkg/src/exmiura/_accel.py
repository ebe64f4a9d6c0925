"""numba switch.

Set ``EXMIURA_DISABLE_NUMBA=1`` to force the pure-numpy code paths (and skip
JIT compilation entirely).
"""
import os


def _numba_wanted() -> bool:
    return os.environ.get("EXMIURA_DISABLE_NUMBA", "").strip().lower() not in ("1", "true", "yes")


try:
    if not _numba_wanted():
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
