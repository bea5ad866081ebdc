import itertools
import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bi3 import recovery
from bi3.errors import PreconditionError, UndefinedCorrelationError
from bi3.evaluation import (CorrelationReport, average_ranks, correlate, cross_validate,
                            data_correlations, f1_positive, fold_plan, instance_correlations,
                            knn_classifier_score, predict, run_suite, spearman, stratified_folds,
                            sweep_ibi3, sweep_k)
from bi3.measures import ibi3_values
from bi3.recovery import ResampledTrainSet
from conftest import make_dataset
from oracles import brute_average_ranks, brute_f1, brute_spearman

# ---- classifier -----------------------------------------------------------


def _line_train(labels, weights=None):
    X = [[float(t + 1)] for t in range(len(labels))]
    t = ResampledTrainSet.from_rows(X, labels)
    if weights is not None:
        t = t._with(weights=np.asarray(weights, dtype=float))
    return t


def test_classifier_vote_fraction():
    s = knn_classifier_score(_line_train([1, 1, 1, -1, -1, -1, -1]), [[0.0]])
    assert s.tolist() == [pytest.approx(0.6)]
    assert predict(s).tolist() == [1]


def test_classifier_weighted_tie_goes_to_majority():
    t = _line_train([1, -1, -1, -1, -1], [4, 1, 1, 1, 1])
    s = knn_classifier_score(t, [[0.0]])
    assert s.tolist() == [0.5]
    assert predict(s).tolist() == [-1]


def test_classifier_all_majority_and_errors():
    assert knn_classifier_score(_line_train([1, -1, -1, -1, -1, -1, -1]), [[100.0]]).tolist() == [0.0]
    with pytest.raises(PreconditionError):
        knn_classifier_score(_line_train([1, -1]), [[0.0]], k=3)


# ---- F1 -------------------------------------------------------------------

def test_f1_examples():
    assert f1_positive([1, -1, 1], [1, -1, 1]) == 1.0
    # TP=2, FP=1, FN=1
    assert f1_positive([1, 1, 1, -1, -1], [1, 1, -1, 1, -1]) == pytest.approx(0.6667, abs=1e-4)
    assert f1_positive([-1, -1], [-1, -1]) == 0.0
    with pytest.raises(ValueError):
        f1_positive([1], [1, -1])


@given(st.lists(st.tuples(st.sampled_from([1, -1]), st.sampled_from([1, -1])), min_size=1, max_size=50))
def test_f1_matches_brute_force(pairs):
    pred, lab = zip(*pairs)
    assert f1_positive(pred, lab) == pytest.approx(brute_f1(pred, lab))


# ---- Spearman -------------------------------------------------------------

def test_spearman_analytic_cases():
    assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    assert spearman([1, 2, 3], [3, 1, 2]) == pytest.approx(-0.5)


def test_spearman_undefined_cases():
    with pytest.raises(UndefinedCorrelationError):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(UndefinedCorrelationError):
        spearman([1], [2])
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2, 3])
    c = correlate([0.0, 0.0], [1.0, 2.0])
    assert not c.defined and c.to_dict()["undefined"] and c.n == 2


def test_ranks_and_spearman_on_all_small_tie_patterns():
    for n in range(2, 6):
        for a in itertools.product(range(3), repeat=n):
            assert average_ranks(a).tolist() == pytest.approx(brute_average_ranks(a))
        pool = list(itertools.product(range(3), repeat=n))
        rng = np.random.default_rng(n)
        for i in rng.choice(len(pool), min(len(pool), 40), replace=False):
            for j in rng.choice(len(pool), 5):
                a, b = pool[i], pool[j]
                if len(set(a)) > 1 and len(set(b)) > 1:
                    assert spearman(a, b) == pytest.approx(brute_spearman(a, b), abs=1e-12)


def test_spearman_over_all_permutations_up_to_five():
    for n in range(2, 6):
        base = list(range(n))
        for perm in itertools.permutations(base):
            assert spearman(base, perm) == pytest.approx(brute_spearman(base, list(perm)), abs=1e-12)


@given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=30))
def test_spearman_self_and_monotone_transform(a):
    if len(set(a)) < 2:
        return
    assert spearman(a, a) == pytest.approx(1.0)
    b = [x ** 3 + 7 for x in a]
    c = list(reversed(a))
    assert spearman(b, c) == pytest.approx(spearman(a, c))


# ---- folds ----------------------------------------------------------------

def test_stratified_folds_example():
    y = np.array([1] * 10 + [-1] * 90)
    a, k = stratified_folds(y, 10, np.random.default_rng(0))
    b, _ = stratified_folds(y, 10, np.random.default_rng(1))
    assert k == 10 and not np.array_equal(a, b)
    for assign in (a, b):
        for f in range(10):
            members = np.flatnonzero(assign == f)
            assert (y[members] == 1).sum() == 1 and (y[members] == -1).sum() == 9


@given(st.integers(1, 40), st.integers(1, 200), st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_fold_invariants(n_pos, n_neg, folds, seed):
    y = np.array([1] * n_pos + [-1] * n_neg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assign, used = stratified_folds(y, folds, np.random.default_rng(seed))
    assert used == min(folds, n_pos, n_neg)
    assert set(assign.tolist()) == set(range(used))
    for c, total in ((1, n_pos), (-1, n_neg)):
        per = np.bincount(assign[y == c], minlength=used)
        assert per.sum() == total
        assert per.max() - per.min() <= 1


def test_folds_reduced_with_warning():
    with pytest.warns(UserWarning, match="reducing folds"):
        plan = fold_plan(np.array([1] * 3 + [-1] * 30), 10, 2, seed=0)
    assert plan.folds == 3
    with pytest.raises(PreconditionError):
        stratified_folds(np.array([-1, -1]), 2, np.random.default_rng(0))


def test_fold_plan_partitions_each_run():
    y = np.array([1] * 13 + [-1] * 57)
    plan = fold_plan(y, 10, 5, seed=[4, 2])
    for run in range(5):
        tests = [plan.split(run, f)[1] for f in range(10)]
        allidx = np.concatenate(tests)
        assert sorted(allidx.tolist()) == list(range(70))
        tr, te = plan.split(run, 0)
        assert not set(tr.tolist()) & set(te.tolist())


# ---- cross-validation and studies ----------------------------------------

def _blobs(n_pos, n_neg, shift, seed):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(shift, 1, (n_pos, 2)), rng.normal(0, 1, (n_neg, 2))])
    return make_dataset(X, [1] * n_pos + [-1] * n_neg, name=f"blobs{seed}")


def test_undersampling_cannot_help_separable_data():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(0, 0.1, (30, 2)) + 20, rng.normal(0, 0.1, (150, 2))])
    ds = make_dataset(X, [1] * 30 + [-1] * 150)
    cv = cross_validate(ds, ("us",), folds=10, runs=3, seed=1, threads=1)
    assert cv.f1_mean("none") == 1.0
    assert cv.f1_gain("us") <= 0


def test_cross_validation_is_deterministic_and_thread_independent():
    ds = _blobs(20, 100, 1.0, 3)
    a = cross_validate(ds, recovery.METHODS, folds=5, runs=2, seed=9, threads=1)
    b = cross_validate(_blobs(20, 100, 1.0, 3), recovery.METHODS, folds=5, runs=2, seed=9, threads=3)
    for m in a.methods:
        assert np.array_equal(a.scores[m], b.scores[m])
        assert np.array_equal(a.f1[m], b.f1[m])
    assert np.all((a.scores["sw"] >= 0) & (a.scores["sw"] <= 1))


def test_cross_validation_rejects_unknown_method():
    with pytest.raises(ValueError):
        cross_validate(_blobs(10, 30, 1.0, 0), ("enn",))


def test_identity_recovery_gives_flagged_correlations():
    results = run_suite([_blobs(15, 60, 1.0, s) for s in range(3)], folds=3, runs=2, threads=1)
    for r in results:
        r.increase["none"] = np.zeros_like(r.ibi3)
        r.f1["same"] = r.f1["none"]
    inst = instance_correlations(results, ["none"])
    assert not inst["none"].defined
    data = data_correlations(results, ["same"])
    assert not data["bi3"]["same"].defined


def test_identical_datasets_give_flagged_data_correlation():
    ds = _blobs(15, 60, 1.0, 0)
    results = run_suite([ds, ds, ds], folds=3, runs=1, threads=1)
    corr = data_correlations(results, recovery.METHODS)
    assert all(not c.defined for row in corr.values() for c in row.values())


def test_report_shape_and_determinism():
    suite = [_blobs(15, 15 * ir, shift, i) for i, (ir, shift) in enumerate([(2, 0.5), (4, 1.0), (6, 2.0), (3, 0.0)])]
    methods = recovery.METHODS
    res_a = run_suite(suite, methods=methods, folds=5, runs=2, seed=7, threads=1)
    res_b = run_suite(suite, methods=methods, folds=5, runs=2, seed=7, threads=2)
    ra = CorrelationReport.from_results("toy", res_a, methods).to_dict()
    rb = CorrelationReport.from_results("toy", res_b, methods).to_dict()
    assert json.dumps(ra) == json.dumps(rb)
    assert ra["schema"] == 1
    assert set(ra["instance_level"]) == set(methods)
    assert set(ra["data_level"]) == {"bi3", "kdn", "cl", "cm", "ir"}
    assert all(set(v) == set(methods) for v in ra["data_level"].values())
    assert len(ra["datasets"]) == 4
    for c in ra["instance_level"].values():
        assert c["value"] is None or -1 <= c["value"] <= 1
    csv_text = CorrelationReport.from_results("toy", res_a, methods).to_csv()
    assert csv_text.splitlines()[0].startswith("dataset,n_pos,n_neg,bi3")


def test_sweep_matches_direct_measure():
    ds = _blobs(20, 200, 1.0, 5)
    sweep = sweep_ibi3(ds, [2, 5, 9])
    for k, (flex, fixed) in sweep.items():
        assert np.array_equal(flex, ibi3_values(ds, k)[0])
        assert np.array_equal(fixed, ibi3_values(ds, k, flexible=False)[0])
    with pytest.raises(PreconditionError):
        sweep_ibi3(ds, [0, 3])


def test_sweep_rows():
    suite = [_blobs(15, 15 * ir, 1.0, i) for i, ir in enumerate([2, 4, 8])]
    rep = sweep_k(suite, range(2, 6), ("us",), folds=3, runs=1, threads=1)
    assert [r["k"] for r in rep.rows] == [2, 3, 4, 5]
    assert set(rep.rows[0]) == {"k", "instance_flexible", "data_flexible", "instance_fixed", "data_fixed"}
    assert rep.to_dict()["schema"] == 1
    assert rep.to_csv().splitlines()[0].split(",")[0] == "k"
