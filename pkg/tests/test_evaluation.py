from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import mann_whitney_auc, rates_by_hand
from tilesparse.errors import DimensionError
from tilesparse.evaluation import (
    ConfusionMatrix,
    binary_metrics,
    confusion,
    confusion_rates,
    multiclass_bal_acc,
    multiclass_metrics,
    ovo_auc,
    roc_auc,
    roc_curve,
    stratified_kfold,
    summarize,
)


def _class_fold_counts(labels, split):
    return {c: sorted(np.bincount(split.fold_assignments[labels == c], minlength=split.k).tolist())
            for c in np.unique(labels)}


def test_kfold_one_per_fold():
    labels = np.array([0] * 5 + [1] * 5)
    split = stratified_kfold(labels, 5, seed=3)
    for _, test in split.folds():
        assert sorted(labels[test]) == [0, 1]


def test_kfold_deterministic():
    labels = np.random.default_rng(0).integers(0, 3, 50)
    a = stratified_kfold(labels, 5, 11).fold_assignments
    np.testing.assert_array_equal(a, stratified_kfold(labels, 5, 11).fold_assignments)


def test_kfold_uneven_counts():
    labels = np.array([0] * 60 + [1] * 43)
    counts = _class_fold_counts(labels, stratified_kfold(labels, 5, seed=1))
    assert counts[0] == [12] * 5
    assert counts[1] == [8, 8, 9, 9, 9]


@given(st.lists(st.integers(0, 3), min_size=12, max_size=80), st.integers(2, 4), st.integers(0, 1000))
def test_kfold_properties(labels, k, seed):
    labels = np.array(labels)
    _, cnt = np.unique(labels, return_counts=True)
    if cnt.min() < k:
        with pytest.raises(ValueError):
            stratified_kfold(labels, k, seed)
        return
    split = stratified_kfold(labels, k, seed)
    for c, sizes in _class_fold_counts(labels, split).items():
        assert max(sizes) - min(sizes) <= 1
    seen = np.concatenate([test for _, test in split.folds()])
    assert sorted(seen.tolist()) == list(range(labels.size))


def test_confusion_examples():
    cm = confusion([0, 1, 2, 1], [0, 1, 2, 1])
    np.testing.assert_array_equal(cm.counts, np.diag([1, 2, 1]))
    cm = confusion([1] * 5, [1, 1, 1, 0, 0], classes=[0, 1])
    assert cm.binary_counts(1) == (3, 0, 0, 2)
    cm = confusion(["a", "b", "b", "c", "a", "c"], ["a", "a", "b", "c", "c", "b"])
    np.testing.assert_array_equal(cm.counts, [[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    with pytest.raises(DimensionError):
        confusion([0], [0, 1])
    with pytest.raises(ValueError):
        confusion([2], [0], classes=[0, 1])


def _binary_cm(tp, fn, tn, fp):
    return ConfusionMatrix(np.array([[tn, fp], [fn, tp]]), (0, 1))


def test_rates_hand_example():
    r = confusion_rates(_binary_cm(9, 1, 8, 2))
    assert r["sens"] == pytest.approx(0.9)
    assert r["spec"] == pytest.approx(0.8)
    assert r["bal_acc"] == pytest.approx(0.85)
    assert r["prec"] == pytest.approx(0.8182, abs=1e-4)
    assert r["f1"] == pytest.approx(0.8571, abs=1e-4)
    assert r["undefined"] == []


def test_rates_undefined():
    r = confusion_rates(_binary_cm(0, 0, 5, 0))
    assert r["sens"] == 0 and "sens" in r["undefined"] and "prec" in r["undefined"] and "f1" in r["undefined"]


@given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30), st.integers(0, 30))
def test_rates_exact(tp, fn, tn, fp):
    r = confusion_rates(_binary_cm(tp, fn, tn, fp))
    want = rates_by_hand(tp, fn, tn, fp)
    for name, value in want.items():
        assert r[name] == float(value)
    if tp + fn and tn + fp:
        cm = _binary_cm(tp, fn, tn, fp)
        assert multiclass_bal_acc(cm) == r["bal_acc"]
        assert r["balanced_auc"] == r["bal_acc"]


def test_auc_examples():
    assert roc_auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert roc_auc([0.5] * 6, [1, 0, 1, 0, 0, 1]) == 0.5
    fpr, tpr, thr = roc_curve([0.3, 0.3, 0.9], [0, 1, 1])
    np.testing.assert_allclose(fpr, [0, 0, 1])
    np.testing.assert_allclose(tpr, [0, 0.5, 1])
    with pytest.raises(ValueError):
        roc_curve([1, 2], [1, 1])


@given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=40))
def test_auc_equals_mann_whitney(pairs):
    scores = [s / 2 for s, _ in pairs]
    truth = [int(t) for _, t in pairs]
    if len(set(truth)) < 2:
        return
    assert roc_auc(scores, truth) == pytest.approx(float(mann_whitney_auc(scores, truth)), abs=1e-12)


def test_binary_metrics_single_class_auc():
    cm = confusion([1, 1], [1, 1], classes=[0, 1])
    out = binary_metrics(cm, [0.1, 0.2], [1, 1])
    assert out["auc"] == 0.0 and "auc" in out["undefined"]


def test_multiclass_bal_acc_examples():
    assert multiclass_bal_acc(ConfusionMatrix(np.diag([3, 4, 5]), (0, 1, 2))) == 1.0
    counts = np.array([[4, 0, 0, 0], [1, 2, 1, 0], [0, 1, 3, 0], [1, 1, 1, 1]])
    assert multiclass_bal_acc(ConfusionMatrix(counts, (0, 1, 2, 3))) == 0.625
    with pytest.raises(ValueError):
        multiclass_bal_acc(ConfusionMatrix(np.array([[1, 0], [0, 0]]), (0, 1)))


def test_ovo_examples():
    rng = np.random.default_rng(0)
    truth = np.array([0, 0, 1, 1, 0, 1])
    s1 = rng.random(6)
    scores = np.c_[1 - s1, s1]
    assert ovo_auc(scores, truth, [0, 1]) == pytest.approx(roc_auc(s1, truth, 1))
    truth3 = np.array([0, 1, 2, 0, 1, 2])
    perfect = np.eye(3)[truth3]
    assert ovo_auc(perfect, truth3, [0, 1, 2]) == 1.0


def test_ovo_hand_toy():
    # pairwise AUCs (0,1)=1.0, (0,2)=0.5, (1,2)=(1+0.5)/2=0.75
    scores = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    truth = np.array([0, 1, 2])
    pairs = []
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        m = (truth == i) | (truth == j)
        a = mann_whitney_auc(scores[m, i], truth[m] == i)
        b = mann_whitney_auc(scores[m, j], truth[m] == j)
        pairs.append((a + b) / 2)
    assert pairs == [1, Fraction(1, 2), Fraction(3, 4)]
    assert ovo_auc(scores, truth, [0, 1, 2]) == 0.75


def test_multiclass_metrics_path():
    truth = np.array([0, 1, 2, 2])
    cm = confusion([0, 1, 2, 1], truth, classes=[0, 1, 2])
    out = multiclass_metrics(cm, np.eye(3)[[0, 1, 2, 1]], truth)
    assert out["bal_acc"] == pytest.approx((1 + 1 + 0.5) / 3)
    assert 0 <= out["auc"] <= 1


def test_summarize_sample_std():
    rep = summarize([{"bal_acc": 0.8}, {"bal_acc": 0.9}, {"bal_acc": 1.0}], names=("bal_acc",))
    assert rep.mean["bal_acc"] == pytest.approx(90.0)
    assert rep.std["bal_acc"] == pytest.approx(10.0)
    assert rep.formatted("bal_acc") == "90.00±10.00"
    assert rep.formatted("auc") == ""


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.floats(-5, 5)), min_size=1, max_size=30))
def test_binary_metrics_in_unit_interval(rows):
    truth = [t for t, _, _ in rows]
    pred = [p for _, p, _ in rows]
    scores = [s for _, _, s in rows]
    out = binary_metrics(confusion(pred, truth, [0, 1]), scores, truth)
    for name, value in out.items():
        if name != "undefined":
            assert 0.0 <= value <= 1.0, name
