"""Pure numpy implementation of the neighbor kernels.

Used when the compiled extension is unavailable (or when ``BI3_PURE_PYTHON=1``).
Squared distances are accumulated column by column, the same order the
compiled kernel uses, so both backends agree bit for bit.
"""
import numpy as np

# cap on the number of distance entries held in memory per block
_BLOCK_ENTRIES = 1 << 21


def _block_rows(n):
    return max(1, _BLOCK_ENTRIES // max(n, 1))


def sqdist_block(Q, X, nominal):
    D = np.zeros((Q.shape[0], X.shape[0]), dtype=np.float64)
    for c in range(X.shape[1]):
        if nominal[c]:
            diff = (Q[:, c, None] != X[None, :, c]).astype(np.float64)
        else:
            diff = Q[:, c, None] - X[None, :, c]
        D += diff * diff
    return D


def _mask_excluded(D, exclude):
    rows = np.flatnonzero(exclude >= 0)
    D[rows, exclude[rows]] = np.inf


def knn_select(Q, X, nominal, k, exclude):
    nq, n = Q.shape[0], X.shape[0]
    idx = np.empty((nq, k), dtype=np.int64)
    dist = np.empty((nq, k), dtype=np.float64)
    step = _block_rows(n)
    for start in range(0, nq, step):
        stop = min(nq, start + step)
        D = sqdist_block(Q[start:stop], X, nominal)
        _mask_excluded(D, exclude[start:stop])
        m = stop - start
        if k < n:
            kth = np.partition(D, k - 1, axis=1)[:, k - 1, None]
            less = D < kth
            tied = D == kth
            need = k - less.sum(axis=1)
            take = less | (tied & (np.cumsum(tied, axis=1) <= need[:, None]))
            cols = np.nonzero(take)[1].reshape(m, k)
        else:
            cols = np.broadcast_to(np.arange(n), (m, n))
        d_sel = np.take_along_axis(D, cols, axis=1)
        # cols is ascending per row, so a stable sort breaks ties by index
        order = np.argsort(d_sel, axis=1, kind="stable")
        idx[start:stop] = np.take_along_axis(cols, order, axis=1)
        dist[start:stop] = np.take_along_axis(d_sel, order, axis=1)
    return idx, dist


def first_positive_rank(Q, X, nominal, positive, exclude):
    nq, n = Q.shape[0], X.shape[0]
    rank = np.zeros(nq, dtype=np.int64)
    pos_mask = positive.astype(bool)
    if not pos_mask.any():
        return rank
    col = np.arange(n)
    step = _block_rows(n)
    for start in range(0, nq, step):
        stop = min(nq, start + step)
        D = sqdist_block(Q[start:stop], X, nominal)
        _mask_excluded(D, exclude[start:stop])
        Dp = np.where(pos_mask[None, :], D, np.inf)
        best_j = np.argmin(Dp, axis=1)
        best = np.take_along_axis(Dp, best_j[:, None], axis=1)
        count = (D < best).sum(axis=1) + ((D == best) & (col[None, :] < best_j[:, None])).sum(axis=1)
        found = np.isfinite(best[:, 0])
        rank[start:stop] = np.where(found, count + 1, 0)
    return rank
