"""Imbalance recovery methods applied to a training fold.

Every method takes and returns a :class:`ResampledTrainSet`. Rows carry a
provenance tag and the id of the original row they came from, so a caller
can verify that nothing outside the training fold leaked in.
"""
from dataclasses import dataclass

import numpy as np

from bi3 import kernels
from bi3.errors import PreconditionError

ORIGINAL, DUPLICATED, SYNTHETIC = 0, 1, 2
METHODS = ("os", "us", "smote", "sw")


@dataclass(frozen=True, eq=False)
class ResampledTrainSet:
    X: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    provenance: np.ndarray
    source: np.ndarray  # original row id; for synthetic rows, the seed row
    nominal: np.ndarray  # columns compared by overlap in the distance
    copy_columns: np.ndarray  # columns SMOTE copies instead of interpolating

    @classmethod
    def from_rows(cls, X, y, ids=None, nominal=None, copy_columns=None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int8)
        n, d = X.shape
        ids = np.arange(n) if ids is None else np.asarray(ids, dtype=np.int64)
        nominal = np.zeros(d, dtype=np.uint8) if nominal is None else np.asarray(nominal, dtype=np.uint8)
        copy_columns = nominal.astype(bool) if copy_columns is None else np.asarray(copy_columns, dtype=bool)
        return cls(X, y, np.ones(n), np.zeros(n, dtype=np.uint8), ids, nominal, copy_columns)

    @property
    def n_pos(self):
        return int((self.y == 1).sum())

    @property
    def n_neg(self):
        return int((self.y == -1).sum())

    def _with(self, rows=None, extra_X=None, extra_source=None, weights=None):
        X, y, prov, src = self.X, self.y, self.provenance, self.source
        w = self.weights
        if rows is not None:
            X, y, prov, src, w = X[rows], y[rows], prov[rows], src[rows], w[rows]
        if extra_X is not None:
            m = len(extra_X)
            X = np.vstack([X, extra_X])
            y = np.concatenate([y, np.ones(m, dtype=np.int8)])
            prov = np.concatenate([prov, np.full(m, SYNTHETIC, dtype=np.uint8)])
            src = np.concatenate([src, extra_source])
            w = np.concatenate([w, np.ones(m)])
        if weights is not None:
            w = weights
        return ResampledTrainSet(np.ascontiguousarray(X), y, w, prov, src, self.nominal, self.copy_columns)


def _classes(train):
    pos = np.flatnonzero(train.y == 1)
    neg = np.flatnonzero(train.y == -1)
    if len(pos) == 0 or len(neg) == 0:
        raise PreconditionError("both classes must be present in the training fold")
    return pos, neg


def oversample(train, rng):
    """Duplicate random minority rows (with replacement) up to the majority count."""
    pos, neg = _classes(train)
    if len(pos) >= len(neg):
        return train
    extra = rng.choice(pos, len(neg) - len(pos), replace=True)
    out = train._with(rows=np.concatenate([np.arange(len(train.y)), extra]))
    prov = out.provenance.copy()
    prov[len(train.y):] = DUPLICATED
    return ResampledTrainSet(out.X, out.y, out.weights, prov, out.source, out.nominal, out.copy_columns)


def undersample(train, rng):
    """Keep a random subset (without replacement) of majority rows of minority size."""
    pos, neg = _classes(train)
    if len(neg) <= len(pos):
        return train
    keep = np.sort(rng.choice(neg, len(pos), replace=False))
    return train._with(rows=np.sort(np.concatenate([pos, keep])))


def smote(train, rng, k_smote=5):
    """Add ``N_n - N_p`` minority rows interpolated towards minority neighbors."""
    pos, neg = _classes(train)
    if len(pos) < 2:
        raise PreconditionError("SMOTE needs at least two minority rows")
    m = len(neg) - len(pos)
    if m <= 0:
        return train
    Xp = np.ascontiguousarray(train.X[pos])
    kk = min(k_smote, len(pos) - 1)
    nb, _ = kernels.knn_select(Xp, Xp, train.nominal, kk, np.arange(len(pos)))
    a = rng.integers(0, len(pos), m)
    b = nb[a, rng.integers(0, kk, m)]
    delta = rng.random((m, 1))
    S = Xp[a] + delta * (Xp[b] - Xp[a])
    if train.copy_columns.any():
        S[:, train.copy_columns] = Xp[a][:, train.copy_columns]
    return train._with(extra_X=S, extra_source=train.source[pos[a]])


def sample_weights(train):
    """Weight ``r = N_n / N_p`` on minority rows, 1 on majority rows."""
    pos, neg = _classes(train)
    r = len(neg) / len(pos)
    return np.where(train.y == 1, r, 1.0)


def weighted(train):
    return train._with(weights=sample_weights(train))


def apply(method, train, rng, k_smote=5):
    if method == "none":
        return train
    if method == "os":
        return oversample(train, rng)
    if method == "us":
        return undersample(train, rng)
    if method == "smote":
        return smote(train, rng, k_smote)
    if method == "sw":
        return weighted(train)
    raise ValueError(f"unknown recovery method {method!r}")
