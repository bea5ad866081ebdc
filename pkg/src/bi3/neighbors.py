"""Distances and nearest-neighbor queries, including the flexible-k rule.

Distance is Euclidean over numeric columns plus a 0/1 mismatch term for
nominal columns. Neighbor lists never contain the query itself and are
ordered by distance, then by ascending sample index.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from bi3 import kernels
from bi3.dataset import NOMINAL
from bi3.errors import PreconditionError, UnsupportedInstanceError

NORMALIZATIONS = ("none", "minmax")
NOMINAL_MODES = ("overlap", "index")


@dataclass(frozen=True)
class MetricConfig:
    """``normalization``: ``none`` or ``minmax`` (per column, whole dataset).

    ``nominal``: ``overlap`` (0 if equal, 1 otherwise) or ``index``, which
    treats category indices as ordinary numbers.
    """

    normalization: str = "none"
    nominal: str = "overlap"

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        if self.nominal not in NOMINAL_MODES:
            raise ValueError(f"nominal must be one of {NOMINAL_MODES}")

    def to_dict(self):
        return {"normalization": self.normalization, "nominal": self.nominal}

    @property
    def label(self):
        return f"{self.normalization}/{self.nominal}"


DEFAULT_METRIC = MetricConfig()


def default_threads():
    return os.cpu_count() or 1


@dataclass(frozen=True)
class Encoded:
    Z: np.ndarray
    nominal: np.ndarray  # uint8 mask of overlap-compared columns


def column_ranges(X):
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    return lo, hi


def _encode_matrix(X, nominal_mask, metric, ranges=None):
    Z = np.array(X, dtype=np.float64, order="C")
    if metric.nominal == "overlap":
        scaled = ~nominal_mask
        mask = nominal_mask.astype(np.uint8)
    else:
        scaled = np.ones_like(nominal_mask)
        mask = np.zeros(nominal_mask.shape, dtype=np.uint8)
    if metric.normalization == "minmax":
        lo, hi = column_ranges(X) if ranges is None else ranges
        span = hi - lo
        cols = np.flatnonzero(scaled)
        for c in cols:
            if span[c] > 0:
                Z[:, c] = (Z[:, c] - lo[c]) / span[c]
            else:
                Z[:, c] = 0.0
    return Encoded(np.ascontiguousarray(Z), mask)


def encode(dataset, metric=DEFAULT_METRIC):
    """Feature matrix as seen by the metric (cached per dataset and metric)."""
    cache = dataset._cache
    key = ("encoded", metric)
    if key not in cache:
        cache[key] = _encode_matrix(dataset.X, dataset.schema.nominal_mask, metric)
    return cache[key]


def distance(a, b, schema, metric=DEFAULT_METRIC, ranges=None):
    """Distance between two rows given as category indices / reals.

    ``ranges`` is the ``(lo, hi)`` pair of per-column bounds, required for
    min-max normalization.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (schema.d,) or b.shape != (schema.d,):
        raise ValueError(f"rows must have {schema.d} entries")
    if metric.normalization == "minmax" and ranges is None:
        raise PreconditionError("min-max normalization needs column ranges")
    enc = _encode_matrix(np.vstack([a, b]), schema.nominal_mask, metric, ranges)
    s = 0.0
    for c in range(schema.d):
        if enc.nominal[c]:
            diff = 1.0 if enc.Z[0, c] != enc.Z[1, c] else 0.0
        else:
            diff = enc.Z[0, c] - enc.Z[1, c]
        s = s + diff * diff
    return float(np.sqrt(s))


@dataclass(frozen=True)
class Neighborhood:
    query: int
    indices: np.ndarray
    distances: np.ndarray
    labels: np.ndarray
    k: int
    M: int
    flexible_applied: bool = False


def _split(n, threads):
    threads = max(1, min(threads or 1, n))
    bounds = np.linspace(0, n, threads + 1).astype(int)
    return [(bounds[i], bounds[i + 1]) for i in range(threads) if bounds[i + 1] > bounds[i]]


def _parallel(fn, n, threads):
    """Run ``fn(start, stop)`` over contiguous chunks; results keep chunk order."""
    chunks = _split(n, threads)
    if len(chunks) <= 1:
        return [fn(0, n)]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        return list(pool.map(lambda c: fn(*c), chunks))


def knn_matrix(Z, nominal, k, queries, exclude_self=True, data=None, threads=None, backend=None):
    """Bulk kNN of rows ``queries`` of ``Z`` against ``data`` (default ``Z``)."""
    queries = np.asarray(queries, dtype=np.int64)
    X = Z if data is None else data
    Q = Z[queries]
    exclude = queries if exclude_self else np.full(len(queries), -1, dtype=np.int64)
    if len(queries) == 0:
        return np.empty((0, k), dtype=np.int64), np.empty((0, k))
    parts = _parallel(
        lambda a, b: kernels.knn_select(Q[a:b], X, nominal, k, exclude[a:b], backend=backend),
        len(queries), threads)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def first_positive_ranks(Z, nominal, positive, queries, threads=None, backend=None):
    queries = np.asarray(queries, dtype=np.int64)
    Q = Z[queries]
    if len(queries) == 0:
        return np.empty(0, dtype=np.int64)
    parts = _parallel(
        lambda a, b: kernels.first_positive_rank(Q[a:b], Z, nominal, positive, queries[a:b], backend=backend),
        len(queries), threads)
    return np.concatenate(parts)


def _check_k(k, n):
    if not 1 <= k <= n - 1:
        raise PreconditionError(f"k={k} out of range [1, {n - 1}]")


def knn(dataset, query_index, k, metric=DEFAULT_METRIC):
    """The ``k`` nearest other samples of one query."""
    _check_k(k, dataset.n)
    enc = encode(dataset, metric)
    idx, sq = knn_matrix(enc.Z, enc.nominal, k, [query_index], threads=1)
    idx, sq = idx[0], sq[0]
    labels = dataset.y[idx]
    return Neighborhood(int(query_index), idx, np.sqrt(sq), labels, k, int((labels == -1).sum()))


def flexible_neighborhood(dataset, query_index, k0, metric=DEFAULT_METRIC):
    """kNN with ``k = k0``, grown to the nearest minority sample when all
    ``k0`` neighbors are majority samples."""
    if dataset.y[query_index] != 1:
        raise PreconditionError("query is not a minority sample")
    if dataset.stats.n_pos < 2:
        raise UnsupportedInstanceError("no other minority sample exists")
    nb = knn(dataset, query_index, k0, metric)
    if nb.M < k0:
        return nb
    enc = encode(dataset, metric)
    rank = int(first_positive_ranks(enc.Z, enc.nominal, (dataset.y == 1).astype(np.uint8),
                                    [query_index], threads=1)[0])
    full = knn(dataset, query_index, rank, metric)
    return Neighborhood(full.query, full.indices, full.distances, full.labels,
                        rank, rank - 1, True)


@dataclass(frozen=True)
class MinorityCounts:
    """Per-minority-sample neighborhood counts from one bulk pass."""

    indices: np.ndarray
    M: np.ndarray          # majority neighbors after the flexible rule
    k: np.ndarray
    M_fixed: np.ndarray    # majority neighbors among the k0 nearest
    flexible_applied: np.ndarray
    k0: int


def minority_counts(dataset, k0, metric=DEFAULT_METRIC, threads=None, backend=None):
    """Flexible and fixed majority-neighbor counts for every minority sample."""
    _check_k(k0, dataset.n)
    if dataset.stats.n_pos < 2:
        raise PreconditionError("need at least two minority samples")
    enc = encode(dataset, metric)
    pos = dataset.positive_indices
    idx, _ = knn_matrix(enc.Z, enc.nominal, k0, pos, threads=threads, backend=backend)
    M_fixed = (dataset.y[idx] == -1).sum(axis=1)
    M = M_fixed.copy()
    k = np.full(len(pos), k0, dtype=np.int64)
    full = M_fixed == k0
    if full.any():
        ranks = first_positive_ranks(enc.Z, enc.nominal, (dataset.y == 1).astype(np.uint8),
                                     pos[full], threads=threads, backend=backend)
        k[full] = ranks
        M[full] = ranks - 1
    return MinorityCounts(pos, M, k, M_fixed, full, k0)
