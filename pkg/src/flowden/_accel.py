"""Numba shim.

Set ``FLOWDEN_DISABLE_NUMBA=1`` to force the pure-numpy kernels. When numba is
missing the numpy kernels are used as well.
"""
import os

_DISABLED = os.environ.get("FLOWDEN_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False
    _numba_njit = None

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(*args, **kw):
    """``numba.njit`` when available, otherwise a passthrough decorator.

    Compilation is requested even when the env flag disables numba so the
    benchmark can still time both paths; the flag only controls which kernel
    the library dispatches to.
    """
    if HAVE_NUMBA:
        kw.setdefault("cache", True)
        return _numba_njit(*args, **kw)
    if len(args) == 1 and callable(args[0]) and not kw:
        return args[0]
    return lambda f: f
