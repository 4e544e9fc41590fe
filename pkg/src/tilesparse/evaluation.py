"""Cross-validation splits, confusion matrices, ROC/AUC and summary metrics.

Confusion-matrix ratios are evaluated in exact rational arithmetic and
rounded to float once, so algebraically equal metrics (binary balanced
accuracy vs. the mean per-class recall) compare equal bit for bit.
Metrics whose denominator is zero are reported as 0 and named in the
``undefined`` list of the result.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import DimensionError

METRIC_NAMES = ("bal_acc", "sens", "spec", "auc", "prec", "f1")


@dataclass(frozen=True)
class CvSplit:
    fold_assignments: np.ndarray
    k: int

    def folds(self):
        """Yield (train_indices, test_indices) for every fold in order."""
        for f in range(self.k):
            yield np.flatnonzero(self.fold_assignments != f), np.flatnonzero(self.fold_assignments == f)


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> CvSplit:
    """Shuffle each class with a seeded generator, then deal its members
    round-robin over the folds.  The dealing position carries over from one
    class to the next so fold totals stay balanced too."""
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    classes, counts = np.unique(labels, return_counts=True)
    small = classes[counts < k]
    if small.size:
        raise ValueError(f"classes {small.tolist()} have fewer than k={k} samples")
    rng = np.random.default_rng(seed)
    folds = np.empty(labels.shape[0], dtype=np.int64)
    offset = 0
    for c in classes:
        members = rng.permutation(np.flatnonzero(labels == c))
        folds[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    return CvSplit(folds, k)


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[t, p]``: samples of true class ``classes[t]`` predicted as ``classes[p]``."""

    counts: np.ndarray
    classes: tuple

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def binary_counts(self, positive) -> tuple[int, int, int, int]:
        """(TP, FN, TN, FP) for a two-class matrix."""
        if len(self.classes) != 2:
            raise ValueError("binary counts need a two-class confusion matrix")
        p = self.classes.index(positive)
        n = 1 - p
        c = self.counts
        return int(c[p, p]), int(c[p, n]), int(c[n, n]), int(c[n, p])


def confusion(predictions, truth, classes=None) -> ConfusionMatrix:
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise DimensionError(f"{predictions.shape[0]} predictions for {truth.shape[0]} labels")
    if classes is None:
        classes = np.unique(np.concatenate([truth, predictions]))
    classes = tuple(np.asarray(classes).tolist())
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(truth.tolist(), predictions.tolist()):
        if t not in index or p not in index:
            raise ValueError(f"label {t if t not in index else p!r} outside class set {classes}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts, classes)


def _ratio(num: int, den: int, name: str, undefined: list) -> Fraction:
    if den == 0:
        undefined.append(name)
        return Fraction(0)
    return Fraction(num, den)


def confusion_rates(cm: ConfusionMatrix, positive=1) -> dict:
    """Balanced accuracy, sensitivity, specificity, precision and F1 from a binary matrix.

    Also returns ``balanced_auc``: the single-threshold AUC formula, which
    coincides with balanced accuracy.
    """
    tp, fn, tn, fp = cm.binary_counts(positive)
    undefined: list = []
    sens = _ratio(tp, tp + fn, "sens", undefined)
    spec = _ratio(tn, tn + fp, "spec", undefined)
    prec = _ratio(tp, tp + fp, "prec", undefined)
    if prec + sens == 0:
        undefined.append("f1")
        f1 = Fraction(0)
    else:
        f1 = 2 * prec * sens / (prec + sens)
    bal = (sens + spec) / 2
    return {"bal_acc": float(bal), "sens": float(sens), "spec": float(spec), "prec": float(prec),
            "f1": float(f1), "balanced_auc": float(bal), "undefined": undefined}


def roc_curve(scores, truth, positive=1):
    """ROC points (fpr, tpr, thresholds), one per distinct score, highest first.

    Tied scores move together, so the curve takes a diagonal step across a tie.
    """
    scores = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(truth) == positive
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both positive and negative samples")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    p = pos[order]
    last = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    tps = np.cumsum(p)[last]
    fps = (last + 1) - tps
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    thresholds = np.r_[np.inf, s[last]]
    return fpr, tpr, thresholds


def auc_trapezoid(fpr, tpr) -> float:
    fpr = np.asarray(fpr)
    tpr = np.asarray(tpr)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1])) / 2.0)


def roc_auc(scores, truth, positive=1) -> float:
    """Area under the ROC curve by trapezoidal integration."""
    return auc_trapezoid(*roc_curve(scores, truth, positive)[:2])


def binary_metrics(cm: ConfusionMatrix, scores, truth, positive=1) -> dict:
    """Confusion-matrix rates plus ROC AUC from the decision scores."""
    out = confusion_rates(cm, positive)
    try:
        out["auc"] = roc_auc(scores, truth, positive)
    except ValueError:
        out["auc"] = 0.0
        out["undefined"].append("auc")
    return out


def multiclass_bal_acc(cm: ConfusionMatrix) -> float:
    """Mean per-class recall."""
    n = cm.counts.sum(axis=1)
    if np.any(n == 0):
        absent = [c for c, k in zip(cm.classes, n) if k == 0]
        raise ValueError(f"classes {absent} have no samples")
    recall = sum(Fraction(int(cm.counts[i, i]), int(n[i])) for i in range(len(n)))
    return float(recall / len(n))


def ovo_auc(scores, truth, classes) -> float:
    """One-vs-one multiclass AUC.

    ``scores[:, i]`` scores membership in ``classes[i]``.  For each unordered
    pair the AUC is taken on samples of those two classes only, once with
    each class as the positive, and the two are averaged; the result is the
    mean over pairs.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    classes = list(classes)
    if len(classes) < 2:
        raise ValueError("OvO AUC needs at least two classes")
    if scores.shape != (truth.shape[0], len(classes)):
        raise DimensionError(f"scores shape {scores.shape} does not match {truth.shape[0]} x {len(classes)}")
    pair_aucs = []
    for i, j in combinations(range(len(classes)), 2):
        mask = (truth == classes[i]) | (truth == classes[j])
        if not ((truth == classes[i]).any() and (truth == classes[j]).any()):
            raise ValueError(f"no samples for pair ({classes[i]!r}, {classes[j]!r})")
        t = truth[mask]
        a_ij = roc_auc(scores[mask, i], t, classes[i])
        a_ji = roc_auc(scores[mask, j], t, classes[j])
        pair_aucs.append((a_ij + a_ji) / 2.0)
    return float(np.mean(pair_aucs))


def multiclass_metrics(cm: ConfusionMatrix, scores, truth) -> dict:
    out = {"bal_acc": multiclass_bal_acc(cm), "undefined": []}
    try:
        out["auc"] = ovo_auc(scores, truth, cm.classes)
    except ValueError:
        out["auc"] = 0.0
        out["undefined"].append("auc")
    return out


@dataclass
class MetricsReport:
    """Mean and sample standard deviation (n-1) over folds, in percent."""

    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)
    n_folds: int = 0

    def formatted(self, name: str, digits: int = 2) -> str:
        if name not in self.mean:
            return ""
        return f"{self.mean[name]:.{digits}f}±{self.std[name]:.{digits}f}"


def summarize(fold_metrics: list[dict], names=METRIC_NAMES) -> MetricsReport:
    report = MetricsReport(n_folds=len(fold_metrics))
    for name in names:
        vals = [m[name] for m in fold_metrics if name in m]
        if len(vals) != len(fold_metrics) or not vals:
            continue
        arr = 100.0 * np.asarray(vals, dtype=np.float64)
        report.mean[name] = float(arr.mean())
        report.std[name] = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return report
