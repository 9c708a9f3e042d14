"""Backend selection for the elimination kernels.

The compiled ``_fastcore`` extension is used when it imported cleanly and the
field carries lookup tables; otherwise the pure-Python ``_purecore`` runs.
Set ``PGCACHE_PURE_PYTHON=1`` to force the fallback at import time.
"""

import os

import numpy as np

from . import _purecore

try:
    if os.environ.get("PGCACHE_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend forced")
    from . import _fastcore
except ImportError:  # extension not built
    _fastcore = None

_backend = "cython" if _fastcore is not None else "python"


def available_backends():
    return ["python"] + (["cython"] if _fastcore is not None else [])


def get_backend():
    return _backend


def set_backend(name):
    """Switch backend at runtime (used by the benchmark). Returns the previous one."""
    global _backend
    if name not in available_backends():
        raise ValueError(f"backend {name!r} is not available")
    prev, _backend = _backend, name
    return prev


def _use_fast(field):
    return _backend == "cython" and field.np_tables is not None


def rref(field, rows, ncols):
    """Reduced row echelon form of ``rows`` over ``field``.

    Returns ``(basis, pivots)`` with ``basis`` a list of int tuples (zero rows
    dropped) and ``pivots`` the strictly increasing pivot columns.
    """
    rows = list(rows)
    if not rows:
        return [], []
    if _use_fast(field):
        add, mul, neg, inv = field.np_tables
        arr = np.asarray(rows, dtype=np.int32).reshape(len(rows), ncols)
        red, piv = _fastcore.rref(arr, add, mul, neg, inv)
        return [tuple(r) for r in red.tolist()], piv
    add, mul, neg, inv = field.py_tables
    return _purecore.rref(rows, ncols, add, mul, neg, inv)


def stacked_ranks(field, prefix, blocks, ncols):
    """Rank of ``prefix`` stacked on top of each block.

    ``blocks`` is an array-like of shape ``(n, s, ncols)``. Returns an int
    numpy array of length ``n``.
    """
    if _use_fast(field):
        add, mul, neg, inv = field.np_tables
        p = np.asarray(prefix, dtype=np.int32).reshape(-1, ncols)
        b = np.asarray(blocks, dtype=np.int32)
        if b.size == 0 and b.ndim != 3:
            b = b.reshape(len(blocks), 0, ncols)
        return _fastcore.stacked_ranks(p, b, add, mul, neg, inv)
    add, mul, neg, inv = field.py_tables
    if isinstance(blocks, np.ndarray):
        blocks = blocks.tolist()
    if isinstance(prefix, np.ndarray):
        prefix = prefix.tolist()
    return np.asarray(_purecore.stacked_ranks(prefix, blocks, ncols, add, mul, neg, inv), dtype=np.int64)
