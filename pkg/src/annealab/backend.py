"""Kernel backend selection.

The hot loops in this package are plain Python functions compiled with numba
when it is available.  Set the environment variable ``ANNEALAB_BACKEND`` to
``numpy`` to run the same code uncompiled (slow, but handy for debugging and
for checking that compilation does not change results), or to ``numba`` to
require compilation and fail loudly if numba is missing.  The variable is read
once at import time.

Vectorised numpy alternatives exist for the non-sequential kernels (state
enumeration, wavefunction matvec); those are independent implementations and
are always importable regardless of the active backend.
"""

from __future__ import annotations

import os

_VALID = ("numba", "numpy")
_requested = os.environ.get("ANNEALAB_BACKEND", "").strip().lower()
if _requested and _requested not in _VALID:
    raise ValueError(
        f"ANNEALAB_BACKEND={_requested!r} not understood; expected one of {_VALID}"
    )

if _requested == "numpy":
    _numba = None
else:
    try:
        import numba as _numba
    except ImportError:
        if _requested == "numba":
            raise
        _numba = None

#: Name of the active backend, either "numba" or "numpy".
BACKEND = "numba" if _numba is not None else "numpy"


def jit(func=None, **options):
    """Decorator for hot kernels.

    Under the numba backend this is ``numba.njit(cache=True, **options)``;
    under the numpy backend it returns the function unchanged.  Usable both
    bare (``@jit``) and with options (``@jit(inline="always")``).
    """
    if BACKEND == "numba":
        options.setdefault("cache", True)
        wrapper = _numba.njit(**options)
        return wrapper if func is None else wrapper(func)
    if func is None:
        return lambda f: f
    return func


def py_func_of(func):
    """Return the uncompiled Python function behind a kernel.

    For a numba dispatcher that is its ``py_func`` attribute; for a plain
    function (numpy backend) it is the function itself.  Tests use this to
    check compiled and interpreted paths agree.
    """
    return getattr(func, "py_func", func)
