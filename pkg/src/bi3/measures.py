"""Imbalance impact indices (IBI³, BI³, BI³_f) and comparison measures.

For a minority sample with ``M`` majority samples among its ``k`` neighbors::

    f_n = M / k,   f_p = (k - M) / k,   f'_p = r * f_p
    IBI3 = f'_p / (f_n + f'_p) - f_p / (f_n + f_p)

where ``r = N_n / N_p``. BI³ is the mean IBI³ over the minority class.
"""
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from bi3.dataset import NOMINAL
from bi3.errors import PreconditionError
from bi3.neighbors import DEFAULT_METRIC, encode, flexible_neighborhood, knn_matrix, minority_counts

CL_MODES = ("bins", "gaussian")


@dataclass(frozen=True)
class PosteriorScores:
    f_n: float
    f_p: float
    f_p_prime: float

    @classmethod
    def from_counts(cls, M, k, r):
        return cls(M / k, (k - M) / k, r * (k - M) / k)

    @property
    def ibi3(self):
        return _normalized(self.f_p_prime, self.f_n) - _normalized(self.f_p, self.f_n)


def _normalized(a, b):
    # 0/0 is taken as 0: the fixed-k case with no minority neighbor
    s = a + b
    return a / s if s > 0 else 0.0


def ibi3_from_counts(M, k, r):
    """IBI³ from neighborhood counts; requires ``0 <= M < k`` and ``r >= 1``."""
    if k < 1 or M < 0:
        raise PreconditionError(f"invalid counts M={M}, k={k}")
    if M >= k:
        raise PreconditionError(f"M={M} leaves no minority neighbor among k={k}")
    if r < 1:
        raise PreconditionError(f"imbalance ratio {r} < 1")
    return PosteriorScores.from_counts(M, k, r).ibi3


def ibi3_array(M, k, r):
    """Vectorized IBI³; rows with ``M == k`` give 0 (the fixed-k convention)."""
    M = np.asarray(M, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    f_n = M / k
    f_p = (k - M) / k
    f_pp = r * f_p
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(f_n + f_pp > 0, f_pp / (f_n + f_pp), 0.0)
        b = np.where(f_n + f_p > 0, f_p / (f_n + f_p), 0.0)
    return a - b


def ibi3(dataset, index, k0=5, metric=DEFAULT_METRIC):
    nb = flexible_neighborhood(dataset, index, k0, metric)
    return ibi3_from_counts(nb.M, nb.k, dataset.stats.ratio)


def ibi3_values(dataset, k0=5, metric=DEFAULT_METRIC, flexible=True, threads=None, counts=None):
    """IBI³ per minority sample (in ascending sample order) and the counts used."""
    if counts is None:
        counts = minority_counts(dataset, k0, metric, threads=threads)
    r = dataset.stats.ratio
    if flexible:
        return ibi3_array(counts.M, counts.k, r), counts
    return ibi3_array(counts.M_fixed, np.full(len(counts.M_fixed), k0), r), counts


def bi3_value(dataset, k0=5, metric=DEFAULT_METRIC, flexible=True, threads=None):
    values, _ = ibi3_values(dataset, k0, metric, flexible, threads)
    return float(values.mean())


# ---- comparison measures -------------------------------------------------

def kdn_values(dataset, k=5, metric=DEFAULT_METRIC, indices=None, threads=None):
    """Fraction of each sample's ``k`` nearest neighbors with the other label."""
    _check_k(k, dataset.n)
    enc = encode(dataset, metric)
    indices = np.arange(dataset.n) if indices is None else np.asarray(indices)
    idx, _ = knn_matrix(enc.Z, enc.nominal, k, indices, threads=threads)
    return (dataset.y[idx] != dataset.y[indices, None]).sum(axis=1) / k


def kdn(dataset, index, k=5, metric=DEFAULT_METRIC):
    return float(kdn_values(dataset, k, metric, [index], threads=1)[0])


def cm(dataset, k=5, metric=DEFAULT_METRIC, threads=None, kdn_all=None):
    """Share of all samples whose same-class neighbor fraction is at most 1/2."""
    if kdn_all is None:
        kdn_all = kdn_values(dataset, k, metric, threads=threads)
    return float(((1.0 - kdn_all) <= 0.5).mean())


def _check_k(k, n):
    if not 1 <= k <= n - 1:
        raise PreconditionError(f"k={k} out of range [1, {n - 1}]")


def _bin_index(col, bins):
    lo, hi = col.min(), col.max()
    if hi <= lo:
        return np.zeros(len(col), dtype=np.int64), lo, hi
    b = np.floor((col - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(b, 0, bins - 1), lo, hi


def _phi(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def cl_values(dataset, bins=10, indices=None, mode="bins"):
    """Class likelihood difficulty ``1 - prod_j p(x_j | y)`` per sample.

    Numeric columns are cut into ``bins`` equal-width bins over their full
    range and nominal columns use their categories. The probability is the
    Laplace-smoothed frequency of the sample's bin within its own class,
    counted without the sample itself. With ``mode="gaussian"`` numeric
    columns instead use the mass of a per-class normal fit over that bin.
    """
    if bins < 2:
        raise PreconditionError("CL needs at least two bins")
    if mode not in CL_MODES:
        raise ValueError(f"mode must be one of {CL_MODES}")
    X, y = dataset.X, dataset.y
    indices = np.arange(dataset.n) if indices is None else np.asarray(indices)
    n_class = {1: int((y == 1).sum()), -1: int((y == -1).sum())}
    if min(n_class.values()) < 1:
        raise PreconditionError("empty class")
    prod = np.ones(len(indices))
    yq = y[indices]
    for j, col in enumerate(dataset.schema.columns):
        if col.kind == NOMINAL:
            codes = X[:, j].astype(np.int64)
            levels = len(col.categories)
        else:
            codes, lo, hi = _bin_index(X[:, j], bins)
            levels = bins
        table = {c: np.bincount(codes[y == c], minlength=levels) for c in (1, -1)}
        qcodes = codes[indices]
        if col.kind == NOMINAL or mode == "bins":
            same = np.where(yq == 1, table[1][qcodes], table[-1][qcodes]) - 1
            denom = np.where(yq == 1, n_class[1], n_class[-1]) - 1 + levels
            prod *= (same + 1) / denom
        else:
            prod *= _gaussian_bin_mass(X[:, j], y, indices, qcodes, lo, hi, bins)
    return 1.0 - prod


def _gaussian_bin_mass(col, y, indices, qcodes, lo, hi, bins):
    out = np.empty(len(indices))
    width = (hi - lo) / bins if hi > lo else 0.0
    fits = {}
    for c in (1, -1):
        v = col[y == c]
        fits[c] = (float(v.mean()), float(v.std()))
    for t, i in enumerate(indices):
        mu, sd = fits[int(y[i])]
        a = lo + qcodes[t] * width
        b = a + width if qcodes[t] < bins - 1 else hi
        if width == 0.0:
            out[t] = 1.0
        elif sd == 0.0:
            out[t] = 1.0 if a <= mu <= b else 0.0
        else:
            out[t] = _phi((b - mu) / sd) - _phi((a - mu) / sd)
    return out


def cl(dataset, index, bins=10, mode="bins"):
    return float(cl_values(dataset, bins, [index], mode)[0])


# ---- Gaussian oracle -----------------------------------------------------

@dataclass(frozen=True)
class GaussianClassModel:
    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if not np.allclose(cov, cov.T):
            raise PreconditionError("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise PreconditionError("covariance is not positive definite") from None
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=np.float64)
        return cls(X.mean(axis=0), np.cov(X, rowvar=False), X.shape[0])

    def logpdf(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        z = np.linalg.solve(self._chol, (X - self.mean).T)
        d = X.shape[1]
        logdet = 2.0 * np.log(np.diag(self._chol)).sum()
        return -0.5 * ((z * z).sum(axis=0) + d * math.log(2 * math.pi) + logdet)


def _sigmoid(t):
    e = np.exp(-np.abs(t))
    return np.where(t >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def gaussian_ibi3(pos, neg, x, n_pos=None, n_neg=None):
    """IBI³ from exact class densities: ``f_n = N_n p(x|-)``, ``f_p = N_p p(x|+)``,
    ``f'_p = N_n p(x|+)``. Accepts one row or a matrix of rows."""
    n_pos = pos.n if n_pos is None else n_pos
    n_neg = neg.n if n_neg is None else n_neg
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    lp = pos.logpdf(x)
    ln = neg.logpdf(x)
    balanced = _sigmoid(lp - ln)
    actual = _sigmoid(math.log(n_pos) + lp - math.log(n_neg) - ln)
    out = balanced - actual
    return float(out[0]) if single else out


# ---- report --------------------------------------------------------------

@dataclass
class MeasureReport:
    name: str
    indices: np.ndarray
    ibi3: np.ndarray
    ibi3_fixed: np.ndarray
    kdn: np.ndarray
    cl: np.ndarray
    M: np.ndarray
    k: np.ndarray
    flexible_applied: np.ndarray
    bi3: float
    bi3_flexible: float
    bi3_fixed: float
    kdn_mean: float
    cl_mean: float
    cm: float
    ir: float
    n_pos: int
    n_neg: int
    config: dict = field(default_factory=dict)
    skipped: int = 0

    def summary(self):
        return {
            "bi3": self.bi3, "bi3_flexible": self.bi3_flexible, "bi3_fixed": self.bi3_fixed,
            "kdn_mean": self.kdn_mean, "cl_mean": self.cl_mean, "cm": self.cm, "ir": self.ir,
            "n_pos": self.n_pos, "n_neg": self.n_neg, "skipped": self.skipped,
        }

    def summary_line(self):
        return (f"BI3={self.bi3:.4f} BI3_f={self.bi3_fixed:.4f} kDN={self.kdn_mean:.4f} "
                f"CL={self.cl_mean:.4f} CM={self.cm:.4f} IR={self.ir:.2f}")

    def to_dict(self):
        return {
            "schema": 1,
            "dataset": self.name,
            "config": self.config,
            "summary": self.summary(),
            "instances": [
                {"index": int(i), "ibi3": float(v), "ibi3_fixed": float(vf), "kdn": float(kd),
                 "cl": float(c), "M": int(m), "k": int(kk), "flexible_applied": bool(f), "skipped": False}
                for i, v, vf, kd, c, m, kk, f in zip(self.indices, self.ibi3, self.ibi3_fixed, self.kdn,
                                                     self.cl, self.M, self.k, self.flexible_applied)
            ],
        }

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "index", "ibi3", "ibi3_fixed", "kdn", "cl", "M", "k", "flexible_applied"])
        for i, v, vf, kd, c, m, kk, f in zip(self.indices, self.ibi3, self.ibi3_fixed, self.kdn,
                                             self.cl, self.M, self.k, self.flexible_applied):
            w.writerow(["instance", int(i), repr(float(v)), repr(float(vf)), repr(float(kd)),
                        repr(float(c)), int(m), int(kk), int(bool(f))])
        w.writerow(["summary", "", repr(self.bi3), repr(self.bi3_fixed), repr(self.kdn_mean),
                    repr(self.cl_mean), "", "", ""])
        return buf.getvalue()


def bi3(dataset, k0=5, metric=DEFAULT_METRIC, flexible=True, bins=10, cl_mode="bins",
        cm_k=None, threads=None):
    """Full measure pass over a canonicalized dataset."""
    stats = dataset.stats
    if stats.n_pos < 2:
        raise PreconditionError("BI3 needs at least two minority samples")
    if stats.n_pos > stats.n_neg:
        raise PreconditionError("dataset is not canonicalized (minority must be +1)")
    cm_k = k0 if cm_k is None else cm_k
    flex, counts = ibi3_values(dataset, k0, metric, True, threads)
    fixed, _ = ibi3_values(dataset, k0, metric, False, counts=counts)
    kdn_all = kdn_values(dataset, cm_k, metric, threads=threads)
    kdn_pos = kdn_all[counts.indices] if cm_k == k0 else kdn_values(dataset, k0, metric, counts.indices, threads)
    cl_pos = cl_values(dataset, bins, counts.indices, cl_mode)
    b_flex, b_fixed = float(flex.mean()), float(fixed.mean())
    return MeasureReport(
        name=dataset.name,
        indices=counts.indices,
        ibi3=flex if flexible else fixed,
        ibi3_fixed=fixed,
        kdn=kdn_pos,
        cl=cl_pos,
        M=counts.M if flexible else counts.M_fixed,
        k=counts.k if flexible else np.full(len(counts.k), k0),
        flexible_applied=counts.flexible_applied if flexible else np.zeros(len(counts.k), dtype=bool),
        bi3=b_flex if flexible else b_fixed,
        bi3_flexible=b_flex,
        bi3_fixed=b_fixed,
        kdn_mean=float(kdn_pos.mean()),
        cl_mean=float(cl_pos.mean()),
        cm=cm(dataset, kdn_all=kdn_all),
        ir=stats.ratio,
        n_pos=stats.n_pos,
        n_neg=stats.n_neg,
        config={"k0": k0, "flexible": flexible, "metric": metric.to_dict(), "cl_bins": bins,
                "cl_mode": cl_mode, "cm_k": cm_k},
    )
