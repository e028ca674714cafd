"""Numba switch.

Set ``RIDGECUT_NUMBA=0`` to run every kernel on its pure-numpy path.
The flag is read once at import time.
"""
import os

_flag = os.environ.get("RIDGECUT_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "no", "off")

try:
    if not NUMBA_REQUESTED:
        raise ImportError
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrapper(func):
            return func

        return wrapper


def thread_cap():
    """Maximum worker count, from ``RIDGECUT_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("RIDGECUT_THREADS", "1")))
    except ValueError:
        return 1
