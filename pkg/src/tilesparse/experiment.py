"""Cross-validated patch-size x component-count grid.

For every fold the dictionary is fitted on the training images only and
then applied to both sides of the split.  The eigendecomposition for one
(patch size, fold) is shared by all component counts, since the k-atom
dictionary is the k-column prefix of the full one.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classify import rf_predict_batch, rf_train, svm_predict_batch, svm_train
from .eigenspace import build_dictionary
from .evaluation import (
    binary_metrics,
    confusion,
    multiclass_metrics,
    roc_curve,
    stratified_kfold,
    summarize,
)
from .imaging import GrayImage, tile
from .sparse import SolverConfig, feature_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelConfig:
    classifier: str = "svm"
    cost: float = 1.0
    class_weight: str = "balanced"
    n_trees: int = 100
    m_try: int | None = None
    scale_features: bool = True
    eigensolver: str = "jacobi"


@dataclass
class FoldResult:
    fold: int
    metrics: dict
    test_ids: list
    train_ids: list
    truth: list
    predictions: list
    scores: list


@dataclass
class CellResult:
    patch_size: int
    n_components: int
    folds: list = field(default_factory=list)

    @property
    def summary(self):
        return summarize([f.metrics for f in self.folds])


@dataclass
class GridResult:
    patch_sizes: list
    component_counts: list
    cells: dict
    mode: str
    classes: list
    positive: list

    def best_cell(self):
        best = None
        for p in self.patch_sizes:
            for k in self.component_counts:
                cell = self.cells.get((p, k))
                if cell is None or not cell.folds:
                    continue
                if best is None or cell.summary.mean["bal_acc"] > best.summary.mean["bal_acc"]:
                    best = cell
        return best


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _standardize_columns(train, test):
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd[sd == 0] = 1.0
    return (train - mu) / sd, (test - mu) / sd


def _fit_predict(xtr, ytr, xte, cfg: ModelConfig, seed: int, classes_idx):
    """Train on (xtr, ytr) and return (predictions, scores) for xte.

    For the SVM, ``ytr`` is +/-1 and scores are decision values.  For the
    forest, scores are per-class vote fractions ordered like ``classes_idx``.
    """
    if cfg.classifier == "svm":
        if cfg.scale_features:
            xtr, xte = _standardize_columns(xtr, xte)
        weights = "balanced" if cfg.class_weight == "balanced" else None
        model = svm_train(xtr, ytr, C=cfg.cost, class_weights=weights)
        scores, pred = svm_predict_batch(model, xte)
        return pred, scores
    model = rf_train(xtr, ytr, n_trees=cfg.n_trees, m_try=cfg.m_try, seed=seed)
    pred, votes = rf_predict_batch(model, xte)
    fractions = np.zeros((xte.shape[0], len(classes_idx)))
    for j, c in enumerate(model.classes):
        fractions[:, classes_idx.index(int(c))] = votes[:, j] / model.n_trees
    return pred, fractions


def binary_targets(labels, class_names, positive=None):
    """Map class ids to +1 (positive classes) / -1 and return the positive names.

    By default a class named like a control group (CTL, control, normal) is
    negative and all others positive; otherwise the first class is negative.
    """
    labels = np.asarray(labels)
    if positive is None:
        controls = [i for i, n in enumerate(class_names) if n.lower() in ("ctl", "ctrl", "control", "normal")]
        neg = controls[:1] or [0]
        pos_ids = [i for i in range(len(class_names)) if i not in neg]
    else:
        missing = set(positive) - set(class_names)
        if missing:
            raise ValueError(f"positive classes {sorted(missing)} not in dataset")
        pos_ids = [class_names.index(n) for n in positive]
    if not pos_ids or len(pos_ids) == len(class_names):
        raise ValueError("binary context needs at least one positive and one negative class")
    return np.where(np.isin(labels, pos_ids), 1, -1), [class_names[i] for i in pos_ids]


def grid_search(images: list[GrayImage], labels, class_names, patch_sizes, component_counts,
                k_folds: int = 5, seed: int = 0, solver: SolverConfig | None = None,
                model: ModelConfig | None = None, image_ids=None, positive=None,
                jobs: int = 1) -> GridResult:
    """Evaluate every (patch size, component count) cell under stratified CV.

    ``labels`` are integer indices into ``class_names``.  The SVM runs a
    binary context (+1 = positive classes); the forest runs multiclass.
    """
    solver = solver or SolverConfig()
    model = model or ModelConfig()
    labels = np.asarray(labels, dtype=np.int64)
    n = len(images)
    if labels.shape != (n,):
        raise ValueError(f"{labels.shape[0]} labels for {n} images")
    image_ids = list(image_ids) if image_ids is not None else [str(i) for i in range(n)]
    patch_sizes = [int(p) for p in patch_sizes]
    component_counts = sorted(int(k) for k in component_counts)
    if model.classifier == "svm":
        targets, pos_names = binary_targets(labels, list(class_names), positive)
        mode = "binary"
        classes_idx = [-1, 1]
    elif model.classifier == "rf":
        targets, pos_names = labels, []
        present = sorted(set(labels.tolist()))
        mode = "binary" if len(present) == 2 else "multiclass"
        classes_idx = present
        if mode == "binary":
            pos_names = [class_names[present[1]]]
    else:
        raise ValueError(f"unknown classifier {model.classifier!r}")
    split = stratified_kfold(targets, k_folds, seed)
    folds = list(split.folds())
    cells = {(p, k): CellResult(p, k) for p in patch_sizes for k in component_counts}
    if not component_counts or not patch_sizes:
        return GridResult(patch_sizes, component_counts, cells, mode, list(class_names), pos_names)

    def job(p, f):
        train, test = folds[f]
        assert not set(train.tolist()) & set(test.tolist())
        patches = np.hstack([tile(images[i], p).data for i in train])
        k_max = component_counts[-1]
        full = build_dictionary(patches, k_max, method=model.eigensolver, patch_size=p)
        out = {}
        for k in component_counts:
            d = full.truncate(k)
            feats = feature_matrix(d, images, solver)
            xtr, xte = feats[train], feats[test]
            seed_cell = derive_seed(seed, p, k, f)
            pred, scores = _fit_predict(xtr, targets[train], xte, model, seed_cell, classes_idx)
            truth = targets[test]
            if mode == "binary":
                pos_label = 1 if model.classifier == "svm" else classes_idx[1]
                s = scores if scores.ndim == 1 else scores[:, 1]
                cm = confusion(pred, truth, classes=classes_idx)
                metrics = binary_metrics(cm, s, truth, positive=pos_label)
                scores = s
            else:
                cm = confusion(pred, truth, classes=classes_idx)
                metrics = multiclass_metrics(cm, scores, truth)
            metrics["confusion"] = cm.counts.tolist()
            out[k] = FoldResult(f, metrics, [image_ids[i] for i in test], [image_ids[i] for i in train],
                                truth.tolist(), np.asarray(pred).tolist(), np.asarray(scores).tolist())
            log.debug("p=%d k=%d fold=%d bal_acc=%.4f", p, k, f, metrics["bal_acc"])
        return p, f, out

    tasks = [(p, f) for p in patch_sizes for f in range(k_folds)]
    if jobs <= 1:
        results = [job(p, f) for p, f in tasks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: job(*t), tasks))
    keyed = {(p, f): out for p, f, out in results}
    for p in patch_sizes:
        for f in range(k_folds):
            for k, fold_result in keyed[(p, f)].items():
                cells[(p, k)].folds.append(fold_result)
    return GridResult(patch_sizes, component_counts, cells, mode, list(class_names), pos_names)


def fold_roc_points(cell: CellResult, mode: str, classes_idx=None):
    """ROC points per fold for a cell: binary rows are (fold, fpr, tpr, threshold);
    multiclass rows add the (positive, negative) class pair."""
    rows = []
    for fr in cell.folds:
        truth = np.asarray(fr.truth)
        scores = np.asarray(fr.scores)
        if mode == "binary":
            pos = 1 if set(truth.tolist()) <= {-1, 1} else max(truth.tolist())
            if len(set(truth.tolist())) < 2:
                continue
            fpr, tpr, thr = roc_curve(scores, truth, pos)
            rows += [(fr.fold, a, b, c) for a, b, c in zip(fpr, tpr, thr)]
        else:
            classes = classes_idx if classes_idx is not None else sorted(set(truth.tolist()))
            for i, ci in enumerate(classes):
                for j, cj in enumerate(classes):
                    if i == j:
                        continue
                    mask = (truth == ci) | (truth == cj)
                    if not ((truth == ci).any() and (truth == cj).any()):
                        continue
                    fpr, tpr, thr = roc_curve(scores[mask, i], truth[mask], ci)
                    rows += [(fr.fold, ci, cj, a, b, c) for a, b, c in zip(fpr, tpr, thr)]
    return rows
