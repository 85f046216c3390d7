"""JIT switch shared by every hot kernel.

Kernels are written in the numba-compatible subset of Python/numpy.  With
``CTMCGSA_DISABLE_JIT=1`` (or numba missing) the very same functions run
as plain Python on numpy arrays, which is slow but bit-identical.
"""

import os

_FLAG = os.environ.get("CTMCGSA_DISABLE_JIT", "").strip().lower()
JIT_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if JIT_DISABLED:
        raise ImportError
    import numba as _numba
except ImportError:  # pragma: no cover - exercised via the env flag
    _numba = None

JIT_ENABLED = _numba is not None


def njit(*args, **kwargs):
    """``numba.njit`` with our defaults, or an identity decorator."""
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    # division by zero must yield inf/nan (checked later), never raise
    kwargs.setdefault("error_model", "numpy")
    if len(args) == 1 and callable(args[0]):
        return _numba.njit(**kwargs)(args[0])
    return _numba.njit(*args, **kwargs)


if _numba is not None and "NUMBA_THREADING_LAYER" not in os.environ:
    # the default search tries TBB first and warns when its version is too old;
    # workqueue ships with numba itself
    _numba.config.THREADING_LAYER = "workqueue"

if _numba is not None:
    prange = _numba.prange
else:
    prange = range
