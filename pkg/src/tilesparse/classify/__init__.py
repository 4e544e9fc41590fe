"""Classifiers on reconstruction-error features: linear SVM and random forest."""
from .forest import RfModel, Tree, rf_margin, rf_predict, rf_predict_batch, rf_train, rf_votes
from .io import load_model, model_to_json, save_model
from .svm import SvmModel, balanced_class_weights, svm_decision, svm_predict, svm_predict_batch, svm_train

__all__ = [
    "RfModel",
    "SvmModel",
    "Tree",
    "balanced_class_weights",
    "load_model",
    "model_to_json",
    "rf_margin",
    "rf_predict",
    "rf_predict_batch",
    "rf_train",
    "rf_votes",
    "save_model",
    "svm_decision",
    "svm_predict",
    "svm_predict_batch",
    "svm_train",
]
