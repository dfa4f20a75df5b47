"""Cross-validated grid search and pooled out-of-fold probabilities."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from .classifiers import Hyperparams, ProbabilityMatrix, fit_predict
from .evaluate import macro_f1

log = logging.getLogger(__name__)


def stratified_folds(
    y: Sequence[int], folds: int = 5, seed: int = 0
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded class-stratified fold assignment.

    Each class's shuffled indices are dealt round-robin over the folds.
    If any class has fewer members than folds, stratification falls back
    to a plain shuffled split (with a warning).
    """
    y = np.asarray(y)
    n = len(y)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if n < folds:
        raise ValueError(f"cannot make {folds} folds from {n} rows")
    rng = np.random.default_rng(seed)
    classes, counts = np.unique(y, return_counts=True)
    assignment = np.empty(n, dtype=np.int64)
    if counts.min() < folds:
        log.warning(
            "class with %d instance(s) cannot be stratified over %d folds; "
            "falling back to unstratified assignment",
            counts.min(), folds,
        )
        assignment[rng.permutation(n)] = np.arange(n) % folds
    else:
        for cls in classes:
            idx = np.flatnonzero(y == cls)
            idx = idx[rng.permutation(len(idx))]
            assignment[idx] = np.arange(len(idx)) % folds
    out = []
    for f in range(folds):
        val = np.flatnonzero(assignment == f)
        train = np.flatnonzero(assignment != f)
        out.append((train, val))
    return out


def grid_search_cv(
    kind: str,
    grid: Sequence[Hyperparams],
    X: np.ndarray,
    y: Sequence[int],
    folds: int = 5,
    seed: int = 0,
) -> tuple[Hyperparams, float]:
    """Return the grid point with the best mean validation macro-F1.

    Fold assignment is fixed across grid points; ties go to the earliest
    grid point (strict improvement required).
    """
    if not grid:
        raise ValueError("empty grid")
    y = np.asarray(y)
    splits = stratified_folds(y, folds, seed)
    best: Hyperparams | None = None
    best_score = -1.0
    for point in grid:
        fold_scores = []
        for train_idx, val_idx in splits:
            result = fit_predict(kind, point, X[train_idx], y[train_idx], X[val_idx], seed=seed)
            fold_scores.append(macro_f1(result.predictions(), y[val_idx]))
        score = float(np.mean(fold_scores))
        if score > best_score:
            best, best_score = point, score
    assert best is not None
    return best, best_score


def cv_probabilities(
    kind: str,
    params: Hyperparams,
    X: np.ndarray,
    y: Sequence[int],
    folds: int = 5,
    seed: int = 0,
) -> np.ndarray:
    """Out-of-fold probability rows for every training row, pooled over the
    cross-validation splits; columns follow the global sorted class set.

    A fold whose training part misses a class contributes zeros in that
    class's column for its validation rows.
    """
    y = np.asarray(y)
    classes = np.unique(y)
    out = np.zeros((len(y), len(classes)))
    for train_idx, val_idx in stratified_folds(y, folds, seed):
        result = fit_predict(kind, params, X[train_idx], y[train_idx], X[val_idx], seed=seed)
        cols = np.searchsorted(classes, result.classes)
        out[val_idx[:, None], cols[None, :]] = result.probs
    return out


def stack_probabilities(prob_list: Sequence[np.ndarray], classes: np.ndarray) -> ProbabilityMatrix:
    return ProbabilityMatrix(np.stack(prob_list, axis=0), np.asarray(classes))
