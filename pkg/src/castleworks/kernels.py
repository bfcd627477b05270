"""Row-scan kernels: the compiled extension when importable, else numpy.

Set ``CASTLEWORKS_PURE=1`` to force the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("CASTLEWORKS_PURE"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        pass


def _mat(M):
    return np.ascontiguousarray(M, dtype=np.int32)


def _idx(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def match_rows(M, cols, target, impl=None):
    """Boolean mask of rows whose entries at ``cols`` equal ``target``."""
    return (impl or _impl).match_rows(_mat(M), _idx(cols), np.ascontiguousarray(target, dtype=np.int32))


def match_pairs(M, a, b, impl=None):
    """Boolean mask of rows with ``M[i, a[j]] == M[i, b[j]]`` for every j."""
    return (impl or _impl).match_pairs(_mat(M), _idx(a), _idx(b))

