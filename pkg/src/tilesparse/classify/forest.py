"""Random forest: bagged, unpruned Gini trees with per-node feature sampling.

Tree ``t`` draws all of its randomness (bootstrap rows and per-node feature
subsets) from its own generator seeded by ``(seed, t)``, so the forest is
the same whether trees are grown sequentially or on a worker pool.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import DimensionError


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; ``feature[i] == -1`` marks a leaf.

    A sample goes left when ``x[feature] <= threshold``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def leaf_votes(self) -> np.ndarray:
        """Class voted by each node (majority of its counts, smallest index on ties)."""
        return np.argmax(self.counts, axis=1)

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def same_as(self, other: "Tree") -> bool:
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("feature", "threshold", "left", "right", "counts"))


@dataclass(frozen=True)
class RfModel:
    trees: tuple
    m_try: int
    seed: int
    classes: np.ndarray
    n_features: int
    min_leaf: int = 1

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def same_as(self, other: "RfModel") -> bool:
        return (self.n_trees == other.n_trees and self.m_try == other.m_try
                and np.array_equal(self.classes, other.classes)
                and all(a.same_as(b) for a, b in zip(self.trees, other.trees)))


def _grow_tree(x, y, n_classes, m_try, min_leaf, rng) -> Tree:
    n, m = x.shape
    rows = rng.integers(0, n, size=n)
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[idx], minlength=n_classes))
        return len(feature) - 1

    stack = [(new_node(rows), rows)]
    while stack:
        node, idx = stack.pop()
        c = counts[node]
        if idx.size <= min_leaf or np.count_nonzero(c) <= 1:
            continue
        feats = rng.choice(m, size=m_try, replace=False)
        f, thr, _ = kernels.best_split(x, y, idx, feats.astype(np.int64), n_classes)
        if f < 0 and m_try < m:
            # every drawn feature was constant here: keep looking through the rest
            rest = np.setdiff1d(np.arange(m), feats)
            f, thr, _ = kernels.best_split(x, y, idx, rng.permutation(rest).astype(np.int64), n_classes)
        if f < 0:
            continue
        go_left = x[idx, f] <= thr
        feature[node] = int(f)
        threshold[node] = float(thr)
        li, ri = idx[go_left], idx[~go_left]
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri))
        stack.append((left[node], li))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(counts, dtype=np.int64).reshape(-1, n_classes))


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tree_index)]))


def rf_train(features, labels, n_trees: int = 100, m_try: int | None = None, seed: int = 0,
             min_leaf: int = 1, jobs: int = 1) -> RfModel:
    """Grow ``n_trees`` trees on bootstrap resamples of the rows.

    ``m_try`` defaults to floor(sqrt(n_features)).
    """
    x = np.ascontiguousarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if x.ndim != 2:
        raise DimensionError(f"features must be 2-D, got shape {x.shape}")
    if labels.shape != (x.shape[0],):
        raise DimensionError(f"{labels.shape[0]} labels for {x.shape[0]} samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("features contain non-finite values")
    m = x.shape[1]
    if m_try is None:
        m_try = max(1, int(np.floor(np.sqrt(m))))
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {n_trees}")
    if not 1 <= m_try <= m:
        raise ValueError(f"m_try must lie in [1, {m}], got {m_try}")
    if min_leaf < 1:
        raise ValueError(f"min_leaf must be >= 1, got {min_leaf}")
    classes, y = np.unique(labels, return_inverse=True)
    if classes.size < 2:
        raise ValueError("random forest training needs at least two classes")
    y = y.astype(np.int64)

    def grow(t):
        return _grow_tree(x, y, classes.size, m_try, min_leaf, tree_rng(seed, t))

    if jobs <= 1:
        trees = [grow(t) for t in range(n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trees = list(pool.map(grow, range(n_trees)))
    return RfModel(tuple(trees), int(m_try), int(seed), classes, m, int(min_leaf))


def rf_votes(model: RfModel, features) -> np.ndarray:
    """Per-class vote counts, shape (n_samples, n_classes)."""
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(features, dtype=np.float64)))
    if x.shape[1] != model.n_features:
        raise DimensionError(f"expected {model.n_features} features, got {x.shape[1]}")
    votes = np.zeros((x.shape[0], model.classes.size), dtype=np.int64)
    rows = np.arange(x.shape[0])
    for tree in model.trees:
        leaf = kernels.tree_apply(tree.feature, tree.threshold, tree.left, tree.right, x)
        np.add.at(votes, (rows, tree.leaf_votes()[leaf]), 1)
    return votes


def rf_predict(model: RfModel, x):
    """(label, votes) for one sample.  Vote ties go to the smallest class id."""
    votes = rf_votes(model, np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
    return model.classes[int(np.argmax(votes))], votes


def rf_predict_batch(model: RfModel, features):
    votes = rf_votes(model, features)
    return model.classes[np.argmax(votes, axis=1)], votes


def margin_from_votes(votes, true_index: int) -> float:
    votes = np.asarray(votes)
    others = np.delete(votes, true_index)
    return float(votes[true_index] - others.max()) / float(votes.sum())


def rf_margin(model: RfModel, x, y) -> float:
    """Vote share of the true class minus the best rival share, in [-1, 1]."""
    hit = np.flatnonzero(model.classes == y)
    if hit.size == 0:
        raise ValueError(f"unknown class {y!r}; model knows {list(model.classes)}")
    _, votes = rf_predict(model, x)
    return margin_from_votes(votes, int(hit[0]))
