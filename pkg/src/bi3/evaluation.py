"""Baseline classifier, cross-validation and the rank-correlation studies.

The baseline is a weighted k-nearest-neighbor classifier. Each dataset is
evaluated by repeated stratified k-fold cross-validation with and without
every recovery method; the measures are computed on the full dataset.
"""
import csv
import io
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from bi3 import kernels, recovery
from bi3.errors import PreconditionError, UndefinedCorrelationError
from bi3.measures import bi3 as measure_pass
from bi3.measures import ibi3_array
from bi3.neighbors import DEFAULT_METRIC, default_threads, encode, first_positive_ranks, knn_matrix

INDICES = ("bi3", "kdn", "cl", "cm", "ir")
METHOD_CODES = {"none": 0, "os": 1, "us": 2, "smote": 3, "sw": 4}


# ---- classifier and metrics ----------------------------------------------

def knn_classifier_score(train, Q, k=5, backend=None):
    """Weighted share of positive labels among the ``k`` nearest training rows."""
    if len(train.y) == 0:
        raise PreconditionError("empty training set")
    if k > len(train.y):
        raise PreconditionError(f"k={k} exceeds the training set size {len(train.y)}")
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    idx, _ = kernels.knn_select(Q, train.X, train.nominal, k, backend=backend)
    w = train.weights[idx]
    return (w * (train.y[idx] == 1)).sum(axis=1) / w.sum(axis=1)


def predict(scores):
    """``+1`` iff the score exceeds 1/2; ties go to the majority class."""
    return np.where(np.asarray(scores) > 0.5, 1, -1).astype(np.int8)


def f1_positive(predictions, labels):
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")
    tp = int(((predictions == 1) & (labels == 1)).sum())
    fp = int(((predictions == 1) & (labels != 1)).sum())
    fn = int(((predictions != 1) & (labels == 1)).sum())
    return 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)


def average_ranks(a):
    """1-based ranks; tied values share the mean of their rank range."""
    a = np.asarray(a, dtype=np.float64)
    if np.isnan(a).any():
        raise ValueError("cannot rank NaN")
    order = np.argsort(a, kind="mergesort")
    s = a[order]
    starts = np.concatenate([[0], np.flatnonzero(np.diff(s)) + 1])
    ends = np.concatenate([starts[1:], [len(a)]])
    ranks = np.empty(len(a))
    ranks[order] = np.repeat((starts + ends + 1) / 2.0, ends - starts)
    return ranks


def spearman(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("spearman needs two sequences of equal length")
    if len(a) < 2:
        raise UndefinedCorrelationError("need at least two pairs")
    ra = average_ranks(a) - (len(a) + 1) / 2.0
    rb = average_ranks(b) - (len(b) + 1) / 2.0
    denom = np.sqrt((ra * ra).sum() * (rb * rb).sum())
    if denom == 0:
        raise UndefinedCorrelationError("a sequence has no rank variance")
    return float(np.clip((ra * rb).sum() / denom, -1.0, 1.0))


@dataclass(frozen=True)
class Correlation:
    value: float = None
    n: int = 0
    reason: str = ""

    @property
    def defined(self):
        return self.value is not None

    def to_dict(self):
        return {"value": self.value, "n": self.n, "undefined": not self.defined, "reason": self.reason}


def correlate(a, b):
    try:
        return Correlation(spearman(a, b), len(a))
    except UndefinedCorrelationError as exc:
        return Correlation(None, len(a), str(exc))


# ---- folds ---------------------------------------------------------------

def stratified_folds(labels, folds, rng):
    """Fold id per sample: each class is shuffled and dealt round-robin.

    When the minority class has fewer samples than ``folds`` the fold count
    is reduced to that size. Returns ``(assignment, folds_used)``.
    """
    labels = np.asarray(labels)
    classes = [np.flatnonzero(labels == c) for c in (1, -1)]
    if any(len(c) == 0 for c in classes):
        raise PreconditionError("a class is empty")
    smallest = min(len(c) for c in classes)
    if smallest < folds:
        warnings.warn(f"reducing folds from {folds} to {smallest}", stacklevel=2)
        folds = smallest
    out = np.empty(len(labels), dtype=np.int64)
    for members in classes:
        out[rng.permutation(members)] = np.arange(len(members)) % folds
    return out, folds


def _seed_words(seed):
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return [int(seed)]


@dataclass(frozen=True, eq=False)
class FoldPlan:
    folds: int
    runs: int
    seed: tuple
    assignment: np.ndarray  # runs x N

    def split(self, run, fold):
        a = self.assignment[run]
        return np.flatnonzero(a != fold), np.flatnonzero(a == fold)


def fold_plan(labels, folds=10, runs=5, seed=0):
    words = _seed_words(seed)
    rows, used = [], folds
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for run in range(runs):
            rng = np.random.default_rng(words + [0, run])
            a, used = stratified_folds(labels, folds, rng)
            rows.append(a)
    if caught:
        warnings.warn(str(caught[0].message), stacklevel=2)
    return FoldPlan(used, runs, tuple(words), np.vstack(rows))


# ---- cross-validation ----------------------------------------------------

@dataclass(eq=False)
class CVResult:
    methods: tuple
    scores: dict  # method -> runs x N test-fold scores
    f1: dict      # method -> per-run F1 over predictions pooled across folds
    plan: FoldPlan

    def f1_mean(self, method):
        return float(np.mean(self.f1[method]))

    def f1_gain(self, method):
        return self.f1_mean(method) - self.f1_mean("none")

    def score_increase(self, method, rows):
        """Mean over runs of (recovered - baseline) score for the given rows."""
        return (self.scores[method][:, rows] - self.scores["none"][:, rows]).mean(axis=0)


def resampled_fold(dataset, method, plan, run, fold, metric=DEFAULT_METRIC, k_smote=5):
    """Training rows of one fold after applying ``method`` (``"none"`` for the baseline)."""
    enc = encode(dataset, metric)
    tr, _ = plan.split(run, fold)
    base = recovery.ResampledTrainSet.from_rows(enc.Z[tr], dataset.y[tr], tr, enc.nominal,
                                                dataset.schema.nominal_mask)
    rng = np.random.default_rng(list(plan.seed) + [1, run, fold, METHOD_CODES[method]])
    return recovery.apply(method, base, rng, k_smote)


def cross_validate(dataset, methods=recovery.METHODS, folds=10, runs=5, seed=0, k=5,
                   metric=DEFAULT_METRIC, k_smote=5, threads=None, plan=None):
    for m in methods:
        if m not in METHOD_CODES or m == "none":
            raise ValueError(f"unknown recovery method {m!r}")
    methods = ("none",) + tuple(methods)
    enc = encode(dataset, metric)
    if plan is None:
        plan = fold_plan(dataset.y, folds, runs, seed)
    N = dataset.n
    scores = {m: np.zeros((plan.runs, N)) for m in methods}

    def task(rf):
        run, fold = rf
        _, te = plan.split(run, fold)
        out = {}
        for m in methods:
            train = resampled_fold(dataset, m, plan, run, fold, metric, k_smote)
            out[m] = knn_classifier_score(train, enc.Z[te], min(k, len(train.y)))
        return run, te, out

    grid = [(r, f) for r in range(plan.runs) for f in range(plan.folds)]
    threads = default_threads() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(task, grid))
    else:
        results = [task(rf) for rf in grid]
    for run, te, out in results:
        for m in methods:
            scores[m][run, te] = out[m]
    f1 = {m: np.array([f1_positive(predict(scores[m][r]), dataset.y) for r in range(plan.runs)])
          for m in methods}
    return CVResult(methods, scores, f1, plan)


# ---- studies -------------------------------------------------------------

@dataclass(eq=False)
class DatasetResult:
    name: str
    n_pos: int
    n_neg: int
    indices: dict        # bi3, bi3_fixed, kdn, cl, cm, ir
    f1: dict             # method -> mean F1 over runs
    ibi3: np.ndarray
    ibi3_fixed: np.ndarray
    increase: dict       # method -> per-minority mean score increase
    cv: CVResult = None

    def gain(self, method):
        return self.f1[method] - self.f1["none"]

    def row(self, methods):
        out = {"dataset": self.name, "n_pos": self.n_pos, "n_neg": self.n_neg}
        out.update({k: float(v) for k, v in self.indices.items()})
        out["f1_baseline"] = self.f1["none"]
        out.update({f"f1_gain_{m}": self.gain(m) for m in methods})
        return out


def evaluate_dataset(dataset, k0=5, methods=recovery.METHODS, folds=10, runs=5, seed=0,
                     metric=DEFAULT_METRIC, bins=10, classifier_k=5, threads=None, keep_cv=False):
    rep = measure_pass(dataset, k0, metric, bins=bins, threads=threads)
    cv = cross_validate(dataset, methods, folds, runs, seed, classifier_k, metric, threads=threads)
    pos = rep.indices
    return DatasetResult(
        name=dataset.name, n_pos=rep.n_pos, n_neg=rep.n_neg,
        indices={"bi3": rep.bi3_flexible, "bi3_fixed": rep.bi3_fixed, "kdn": rep.kdn_mean,
                 "cl": rep.cl_mean, "cm": rep.cm, "ir": rep.ir},
        f1={m: cv.f1_mean(m) for m in cv.methods},
        ibi3=rep.ibi3, ibi3_fixed=rep.ibi3_fixed,
        increase={m: cv.score_increase(m, pos) for m in methods},
        cv=cv if keep_cv else None,
    )


def run_suite(datasets, k0=5, methods=recovery.METHODS, folds=10, runs=5, seed=0,
              metric=DEFAULT_METRIC, bins=10, classifier_k=5, threads=None, keep_cv=False,
              on_result=None):
    """Evaluate every dataset; dataset ``i`` uses seed words ``[seed, i]``."""
    out = []
    for i, ds in enumerate(datasets):
        res = evaluate_dataset(ds, k0, methods, folds, runs, _seed_words(seed) + [i], metric, bins,
                               classifier_k, threads, keep_cv)
        out.append(res)
        if on_result is not None:
            on_result(res)
    return out


def instance_correlations(results, methods, flexible=True):
    values = np.concatenate([r.ibi3 if flexible else r.ibi3_fixed for r in results])
    return {m: correlate(values, np.concatenate([r.increase[m] for r in results])) for m in methods}


def data_correlations(results, methods, indices=INDICES, flexible=True):
    out = {}
    for ix in indices:
        key = "bi3_fixed" if ix == "bi3" and not flexible else ix
        xs = [r.indices[key] for r in results]
        out[ix] = {m: correlate(xs, [r.gain(m) for r in results]) for m in methods}
    return out


@dataclass(eq=False)
class CorrelationReport:
    suite: str
    methods: tuple
    instance: dict
    data: dict
    datasets: list
    config: dict = field(default_factory=dict)

    @classmethod
    def from_results(cls, suite, results, methods, config=None):
        return cls(suite, tuple(methods), instance_correlations(results, methods),
                   data_correlations(results, methods), results, config or {})

    def to_dict(self):
        return {
            "schema": 1,
            "suite": self.suite,
            "config": self.config,
            "instance_level": {m: c.to_dict() for m, c in self.instance.items()},
            "data_level": {ix: {m: c.to_dict() for m, c in row.items()} for ix, row in self.data.items()},
            "datasets": [r.row(self.methods) for r in self.datasets],
        }

    def to_csv(self):
        rows = [r.row(self.methods) for r in self.datasets]
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        return buf.getvalue()


def run_instance_study(datasets, k0=5, methods=recovery.METHODS, folds=10, runs=5, seed=0,
                       metric=DEFAULT_METRIC, threads=None, suite="custom"):
    results = run_suite(datasets, k0, methods, folds, runs, seed, metric, threads=threads)
    return CorrelationReport(suite, tuple(methods), instance_correlations(results, methods), {}, results)


def run_data_study(datasets, k0=5, methods=recovery.METHODS, folds=10, runs=5, seed=0,
                   metric=DEFAULT_METRIC, threads=None, suite="custom"):
    results = run_suite(datasets, k0, methods, folds, runs, seed, metric, threads=threads)
    return CorrelationReport(suite, tuple(methods), {}, data_correlations(results, methods), results)


# ---- neighbor-count sweep ------------------------------------------------

def sweep_ibi3(dataset, k_values, metric=DEFAULT_METRIC, threads=None):
    """Flexible and fixed IBI³ of every minority sample for each ``k``.

    One neighbor pass at the largest ``k`` serves every smaller ``k``.
    Returns ``{k: (flexible, fixed)}``.
    """
    k_values = sorted(set(int(k) for k in k_values))
    kmax = k_values[-1]
    if k_values[0] < 1 or kmax > dataset.n - 1:
        raise PreconditionError("k out of range")
    enc = encode(dataset, metric)
    pos = dataset.positive_indices
    idx, _ = knn_matrix(enc.Z, enc.nominal, kmax, pos, threads=threads)
    neg_prefix = np.cumsum(dataset.y[idx] == -1, axis=1)
    ranks = first_positive_ranks(enc.Z, enc.nominal, (dataset.y == 1).astype(np.uint8), pos, threads=threads)
    r = dataset.stats.ratio
    out = {}
    for k in k_values:
        M = neg_prefix[:, k - 1]
        full = M == k
        kk = np.where(full, ranks, k)
        MM = np.where(full, ranks - 1, M)
        out[k] = (ibi3_array(MM, kk, r), ibi3_array(M, np.full(len(M), k), r))
    return out


@dataclass(eq=False)
class SweepReport:
    suite: str
    methods: tuple
    rows: list  # dicts with k, instance_flexible, instance_fixed, data_flexible, data_fixed

    def to_dict(self):
        return {"schema": 1, "suite": self.suite, "methods": list(self.methods), "rows": self.rows}

    def to_csv(self):
        buf = io.StringIO()
        if self.rows:
            w = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(self.rows)
        return buf.getvalue()


def _mean_defined(corrs):
    vals = [c.value for c in corrs if c.defined]
    return float(np.mean(vals)) if vals else None


def sweep_k(datasets, k_values, methods=recovery.METHODS, folds=10, runs=5, seed=0,
            metric=DEFAULT_METRIC, classifier_k=5, threads=None, suite="custom", results=None):
    """Correlations of flexible and fixed BI³ for each ``k``, averaged over methods.

    The cross-validation is run once (or taken from ``results`` of an earlier
    :func:`run_suite` over the same datasets); only the measure changes with ``k``.
    """
    datasets = list(datasets)
    if results is None:
        results = run_suite(datasets, 5, methods, folds, runs, seed, metric,
                            classifier_k=classifier_k, threads=threads)
    if len(results) != len(datasets):
        raise ValueError("results do not match the datasets")
    inc = {m: np.concatenate([r.increase[m] for r in results]) for m in methods}
    gains = {m: [r.gain(m) for r in results] for m in methods}
    per_k = {int(k): ([], []) for k in k_values}
    for ds in datasets:
        for k, (flex, fixed) in sweep_ibi3(ds, per_k, metric, threads).items():
            per_k[k][0].append(flex)
            per_k[k][1].append(fixed)
    rows = []
    for k in sorted(per_k):
        row = {"k": k}
        for label, vals in zip(("flexible", "fixed"), per_k[k]):
            inst = [correlate(np.concatenate(vals), inc[m]) for m in methods]
            data = [correlate([v.mean() for v in vals], gains[m]) for m in methods]
            row[f"instance_{label}"] = _mean_defined(inst)
            row[f"data_{label}"] = _mean_defined(data)
        rows.append(row)
    return SweepReport(suite, tuple(methods), rows)
