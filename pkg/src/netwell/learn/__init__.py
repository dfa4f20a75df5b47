"""Wellness-state prediction: native classifiers, cross-validated grid
search, the weighted-voting ensemble, and F1 evaluation."""

from .classifiers import (
    CLASSIFIER_KINDS,
    Hyperparams,
    PredictResult,
    ProbabilityMatrix,
    Standardizer,
    fit_predict,
)
from .evaluate import EvalReport, evaluate, macro_f1, per_class_f1
from .ensemble import EnsembleWeights, ensemble_predict, ensemble_weight_search, weight_rows
from .model_select import cv_probabilities, grid_search_cv, stratified_folds
from .experiment import ExperimentReport, run_experiment, split_rows

__all__ = [
    "CLASSIFIER_KINDS",
    "Hyperparams",
    "PredictResult",
    "ProbabilityMatrix",
    "Standardizer",
    "fit_predict",
    "EvalReport",
    "evaluate",
    "macro_f1",
    "per_class_f1",
    "EnsembleWeights",
    "ensemble_predict",
    "ensemble_weight_search",
    "weight_rows",
    "cv_probabilities",
    "grid_search_cv",
    "stratified_folds",
    "ExperimentReport",
    "run_experiment",
    "split_rows",
]
