"""Backend selection for the neighbor kernels.

The compiled extension is used when it has been built; otherwise the numpy
fallback is loaded. Set ``BI3_PURE_PYTHON=1`` to force the fallback.

Both backends expose:

``knn_select(Q, X, nominal, k, exclude) -> (indices, sqdist)``
    The ``k`` nearest rows of ``X`` for each row of ``Q``, ordered by squared
    distance and then by ascending row index. ``exclude[i]`` names one row
    of ``X`` that query ``i`` may not select (``-1`` for none).

``first_positive_rank(Q, X, nominal, positive, exclude) -> ranks``
    1-based position of the nearest ``positive`` row in that same ordering,
    or ``0`` when no eligible positive row exists.
"""
import os

import numpy as np

from bi3 import _fallback

fallback = _fallback

compiled = None
if os.environ.get("BI3_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from bi3 import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else fallback
BACKEND = "cython" if compiled is not None else "numpy"


def _prepare(Q, X, nominal, exclude):
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    if Q.ndim != 2 or X.ndim != 2 or Q.shape[1] != X.shape[1] or X.shape[1] == 0:
        raise ValueError(f"shape mismatch: queries {Q.shape}, data {X.shape}")
    nominal = np.ascontiguousarray(nominal, dtype=np.uint8)
    if nominal.shape != (X.shape[1],):
        raise ValueError("nominal mask must have one entry per column")
    if exclude is None:
        exclude = np.full(Q.shape[0], -1, dtype=np.int64)
    else:
        exclude = np.ascontiguousarray(exclude, dtype=np.int64)
        if exclude.shape != (Q.shape[0],):
            raise ValueError("exclude must have one entry per query")
    return Q, X, nominal, exclude


def knn_select(Q, X, nominal, k, exclude=None, backend=None):
    Q, X, nominal, exclude = _prepare(Q, X, nominal, exclude)
    available = X.shape[0] - (1 if (exclude >= 0).any() else 0)
    if not 1 <= k <= available:
        raise ValueError(f"k={k} out of range [1, {available}]")
    impl = _resolve(backend)
    return impl.knn_select(Q, X, nominal, int(k), exclude)


def first_positive_rank(Q, X, nominal, positive, exclude=None, backend=None):
    Q, X, nominal, exclude = _prepare(Q, X, nominal, exclude)
    positive = np.ascontiguousarray(positive, dtype=np.uint8)
    if positive.shape != (X.shape[0],):
        raise ValueError("positive mask must have one entry per data row")
    impl = _resolve(backend)
    return impl.first_positive_rank(Q, X, nominal, positive, exclude)


def _resolve(backend):
    if backend is None:
        return _impl
    if backend == "numpy":
        return fallback
    if backend == "cython":
        if compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return compiled
    raise ValueError(f"unknown backend {backend!r}")
