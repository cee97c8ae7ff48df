"""Optional numba acceleration.

Set ``CANARD_FRACTAL_DISABLE_NUMBA=1`` to run every kernel through the
pure numpy/python path instead.  The flag is read once at import time;
:class:`use_numba` switches dispatch temporarily.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("CANARD_FRACTAL_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

try:  # pragma: no cover - depends on environment
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

USE_NUMBA = _numba is not None and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when acceleration is active, identity otherwise."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(func):
        return func

    return wrapper


def active() -> bool:
    """Whether polynomial fast paths should dispatch to the compiled kernels."""
    return USE_NUMBA


class use_numba:
    """Context manager forcing the compiled (True) or numpy (False) path.

    Turning numba on has no effect when it was disabled at import time,
    since the kernels were never compiled.
    """

    def __init__(self, flag: bool):
        self.flag = bool(flag)

    def __enter__(self):
        global USE_NUMBA
        self._saved = USE_NUMBA
        USE_NUMBA = self.flag and _numba is not None and not DISABLED
        return self

    def __exit__(self, *exc):
        global USE_NUMBA
        USE_NUMBA = self._saved
        return False
