"""Class-weighted linear SVM trained by dual coordinate descent.

The bias is folded in as a constant feature (value ``bias_scale``, default 1),
so it is regularised along with the weights.  Sample i gets the box [0, C * w(y_i)]
where w is the class weight.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import DimensionError

log = logging.getLogger(__name__)

TOL = 1e-6
MAX_EPOCHS = 100_000


@dataclass(frozen=True)
class SvmModel:
    weights: np.ndarray
    bias: float
    dual_coefficients: np.ndarray
    cost: float
    class_weights: dict
    epochs: int = 0
    max_violation: float = 0.0
    bias_scale: float = 1.0

    @property
    def converged(self) -> bool:
        return self.max_violation < TOL

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]


def balanced_class_weights(labels) -> dict:
    """n_total / (n_classes * n_class) for every class present."""
    classes, counts = np.unique(labels, return_counts=True)
    n = counts.sum()
    return {int(c): float(n / (len(classes) * k)) for c, k in zip(classes, counts)}


def _check_xy(features, labels):
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2:
        raise DimensionError(f"features must be 2-D, got shape {x.shape}")
    if y.shape != (x.shape[0],):
        raise DimensionError(f"{y.shape[0]} labels for {x.shape[0]} samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("features contain non-finite values")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("SVM labels must be -1 or +1")
    if not ((y == 1).any() and (y == -1).any()):
        raise ValueError("SVM training needs samples of both classes")
    return x, y.astype(np.float64)


def svm_train(features, labels, C: float = 1.0, class_weights="balanced",
              tol: float = TOL, max_epochs: int = MAX_EPOCHS, bias_scale: float = 1.0) -> SvmModel:
    """Fit ``f(x) = <w, x> + b`` with hinge loss and per-class costs.

    ``class_weights`` is ``"balanced"``, ``None`` (all ones) or a mapping
    from label (+1/-1) to multiplier.  The penalty on the bias is
    ``(b / bias_scale)^2 / 2``, so a larger ``bias_scale`` regularises it less.
    """
    x, y = _check_xy(features, labels)
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    if not bias_scale > 0:
        raise ValueError(f"bias_scale must be positive, got {bias_scale}")
    if class_weights == "balanced":
        cw = balanced_class_weights(y.astype(int))
    elif class_weights is None:
        cw = {-1: 1.0, 1: 1.0}
    else:
        cw = {int(k): float(v) for k, v in dict(class_weights).items()}
        if set(cw) != {-1, 1} or min(cw.values()) <= 0:
            raise ValueError("class_weights needs positive entries for both -1 and +1")
    upper = C * np.where(y > 0, cw[1], cw[-1])
    x_aug = np.hstack([x, np.full((x.shape[0], 1), float(bias_scale))])
    alpha, _, epochs, viol = kernels.svm_dual_cd(np.ascontiguousarray(x_aug), y, upper, tol, max_epochs)
    if viol >= tol:
        log.warning("SVM dual CD stopped after %d epochs with violation %.3e", epochs, viol)
    w_aug = x_aug.T @ (alpha * y)
    return SvmModel(w_aug[:-1].copy(), float(w_aug[-1] * bias_scale), alpha, float(C), cw, int(epochs), float(viol),
                    float(bias_scale))


def svm_decision(model: SvmModel, features) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.shape[-1] != model.n_features:
        raise DimensionError(f"expected {model.n_features} features, got {x.shape[-1]}")
    return x @ model.weights + model.bias


def svm_predict(model: SvmModel, x):
    """(score, label) for one sample; a score of exactly 0 is labelled +1."""
    score = float(svm_decision(model, np.asarray(x, dtype=np.float64).reshape(-1)))
    return score, 1 if score >= 0 else -1


def svm_predict_batch(model: SvmModel, features):
    scores = svm_decision(model, features)
    return scores, np.where(scores >= 0, 1, -1)


def dual_objective(model: SvmModel) -> float:
    """sum(alpha) - 0.5 * ||sum_i y_i alpha_i [x_i, bias_scale]||^2 (maximised by training)."""
    w_aug = np.append(model.weights, model.bias / model.bias_scale)
    return float(model.dual_coefficients.sum() - 0.5 * w_aug @ w_aug)


def kkt_violation(model: SvmModel, features, labels) -> float:
    """Largest projected-gradient magnitude of the dual at the stored solution."""
    x, y = _check_xy(features, labels)
    upper = model.cost * np.where(y > 0, model.class_weights[1], model.class_weights[-1])
    g = y * svm_decision(model, x) - 1.0
    a = model.dual_coefficients
    pg = np.where(a <= 0, np.minimum(g, 0), np.where(a >= upper, np.maximum(g, 0), g))
    return float(np.abs(pg).max())
