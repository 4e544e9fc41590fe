"""Patch-wise PCA dictionaries, L1 sparse coding and reconstruction-error classifiers."""
__version__ = "0.1.0"

from .eigenspace import Dictionary, build_dictionary, column_mean, covariance, project, sym_eig
from .evaluation import (
    binary_metrics,
    confusion,
    multiclass_bal_acc,
    ovo_auc,
    roc_auc,
    stratified_kfold,
)
from .experiment import grid_search
from .imaging import GrayImage, PatchMatrix, load_image, resize_bilinear, standardize, tile, untile
from .sparse import SolverConfig, encode_epsilon, extract_features, lasso, recon_error

__all__ = [
    "Dictionary",
    "GrayImage",
    "PatchMatrix",
    "SolverConfig",
    "binary_metrics",
    "build_dictionary",
    "column_mean",
    "confusion",
    "covariance",
    "encode_epsilon",
    "extract_features",
    "grid_search",
    "lasso",
    "load_image",
    "multiclass_bal_acc",
    "ovo_auc",
    "project",
    "recon_error",
    "resize_bilinear",
    "roc_auc",
    "standardize",
    "stratified_kfold",
    "sym_eig",
    "tile",
    "untile",
]
