"""The end-to-end prediction experiment: one 75/25 split shared by the
three feature-group ablations, per-classifier grid search, ensemble weight
selection on pooled cross-validation predictions, and F1 evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import DataError
from ..features import FeatureMatrix
from .classifiers import Hyperparams, fit_predict
from .ensemble import DEFAULT_BUDGET, EnsembleWeights, ensemble_predict, ensemble_weight_search
from .evaluate import EvalReport, evaluate
from .model_select import cv_probabilities, grid_search_cv, stack_probabilities

log = logging.getLogger(__name__)

DEFAULT_BASE = ("svm", "knn", "rf")
ABLATIONS = {
    "gender_behavior": ("gender", "behavior"),
    "structure": ("structure",),
    "combined": ("gender", "behavior", "structure"),
}
DEFAULT_GRIDS: dict[str, tuple[Hyperparams, ...]] = {
    "knn": tuple(Hyperparams(knn_k=k) for k in (3, 5, 9, 15)),
    "cart": tuple(Hyperparams(cart_min_leaf=m) for m in (1, 5, 15)),
    "svm": (Hyperparams(svm_kernel="linear", svm_cost=1.0),
            Hyperparams(svm_kernel="rbf", svm_gamma=0.1, svm_cost=1.0)),
    "lr": (Hyperparams(lr_l2=1e-3), Hyperparams(lr_l2=1e-1)),
    "rf": (Hyperparams(rf_trees=35),),
}


def split_rows(
    matrix: FeatureMatrix,
    train_fraction: float = 0.75,
    mode: str = "row",
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded train/test split over person-week rows.

    mode="row" splits rows directly (the same person's weeks can land on
    both sides); mode="person" assigns whole persons to one side, which
    avoids identity leakage at the cost of a less exact row fraction.
    """
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    n = len(matrix.rows)
    if mode == "row":
        perm = rng.permutation(n)
        cut = int(round(train_fraction * n))
        return np.sort(perm[:cut]), np.sort(perm[cut:])
    if mode == "person":
        persons = matrix.persons
        perm = rng.permutation(len(persons))
        cut = int(round(train_fraction * len(persons)))
        train_persons = {persons[i] for i in perm[:cut]}
        idx = np.arange(n)
        is_train = np.array([p in train_persons for p, _ in matrix.rows])
        return idx[is_train], idx[~is_train]
    raise ValueError(f"unknown split mode {mode!r}")


@dataclass
class AblationResult:
    groups: tuple[str, ...]
    eval: EvalReport
    hyperparams: dict[str, Hyperparams]
    cv_scores: dict[str, float]
    weights: EnsembleWeights


@dataclass
class ExperimentReport:
    target: str
    base: tuple[str, ...]
    split: dict
    ablations: dict[str, AblationResult] = field(default_factory=dict)

    def macro(self, ablation: str) -> float:
        return self.ablations[ablation].eval.macro_f1


def run_experiment(
    matrix: FeatureMatrix,
    seed: int = 0,
    split_mode: str = "row",
    train_fraction: float = 0.75,
    grids: Mapping[str, Sequence[Hyperparams]] | None = None,
    base: Sequence[str] = DEFAULT_BASE,
    folds: int = 5,
    weight_step: float = 0.1,
    weight_mode: str = "auto",
    weight_budget: int = DEFAULT_BUDGET,
) -> ExperimentReport:
    """Run the three feature-group ablations with identical splits/seeds.

    The matrix must carry all three groups so every ablation sees the same
    rows. Seeds for the split, the fold assignment, and each classifier
    are derived deterministically from the one experiment seed.
    """
    missing = {"gender", "behavior", "structure"} - set(matrix.groups)
    if missing:
        raise DataError(f"experiment needs all feature groups; missing {sorted(missing)}")
    grids = dict(grids or DEFAULT_GRIDS)
    train_idx, test_idx = split_rows(matrix, train_fraction, split_mode, seed)
    train_y = matrix.y[train_idx]
    test_y = matrix.y[test_idx]
    if len(np.unique(train_y)) < 2:
        raise DataError("training split has a single class")
    split_info = {
        "train_fraction": train_fraction,
        "mode": split_mode,
        "seed": seed,
        "n_train": int(len(train_idx)),
        "n_test": int(len(test_idx)),
    }
    report = ExperimentReport(target=matrix.target, base=tuple(base), split=split_info)

    # one deterministic child seed per (ablation, classifier)
    children = np.random.SeedSequence(seed).spawn(len(ABLATIONS) * len(base))
    seed_iter = iter(int(ss.generate_state(1)[0]) for ss in children)

    for name, groups in ABLATIONS.items():
        sub = matrix.subset(groups)
        X_train, X_test = sub.X[train_idx], sub.X[test_idx]
        classes = np.unique(train_y)
        chosen: dict[str, Hyperparams] = {}
        cv_scores: dict[str, float] = {}
        oof = []
        test_probs = []
        for kind in base:
            kind_seed = next(seed_iter)
            grid = tuple(grids.get(kind) or (Hyperparams(),))
            params, score = grid_search_cv(kind, grid, X_train, train_y, folds=folds, seed=kind_seed)
            chosen[kind] = params
            cv_scores[kind] = score
            oof.append(cv_probabilities(kind, params, X_train, train_y, folds=folds, seed=kind_seed))
            result = fit_predict(kind, params, X_train, train_y, X_test, seed=kind_seed)
            cols = np.searchsorted(classes, result.classes)
            aligned = np.zeros((len(test_idx), len(classes)))
            aligned[:, cols] = result.probs
            test_probs.append(aligned)
        weights = ensemble_weight_search(
            stack_probabilities(oof, classes), train_y,
            step=weight_step, mode=weight_mode, budget=weight_budget,
        )
        preds = ensemble_predict(weights, stack_probabilities(test_probs, classes))
        ev = evaluate(preds, test_y, split=split_info, expected_classes=classes)
        if ev.unevaluated_classes:
            log.warning("ablation %s: classes %s absent from the test split",
                        name, ev.unevaluated_classes)
        report.ablations[name] = AblationResult(groups, ev, chosen, cv_scores, weights)
    return report
