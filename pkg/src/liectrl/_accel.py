"""Numba dispatch.

Hot kernels are compiled with ``numba.njit`` unless the environment variable
``LIECTRL_DISABLE_NUMBA`` is set to a truthy value (or numba is missing), in
which case the vectorised numpy implementations are used instead.
"""

import os

_FLAG = os.environ.get("LIECTRL_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func=None, **options):
    """Compile ``func`` in nopython mode when numba is available, else return it unchanged."""
    if func is None:
        return lambda f: njit(f, **options)
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True, **options)(func)
    return func
