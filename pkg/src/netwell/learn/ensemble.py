"""The weighted-voting ensemble: per-classifier, per-class weights on a
fixed grid, selected to maximize validation macro-F1.

Each classifier's weight row is a composition of 1/step tenths (or
whatever the step implies) over the classes, summing to 1. The exhaustive
search enumerates every combination of rows in lexicographic order of the
flattened weight vector, so the first maximum IS the lexicographic
tie-break winner. Above the combination budget, the explicit coordinate-
ascent mode sweeps one classifier's row at a time; it never silently
approximates: the returned weights record which mode produced them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import BudgetError
from .classifiers import ProbabilityMatrix
from .evaluate import macro_f1

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 300_000


def weight_rows(n_classes: int, step: float = 0.1) -> np.ndarray:
    """All weight rows on the step grid summing to 1, lexicographically
    ascending; shape (R, n_classes) with R = C(T + J - 1, J - 1), T = 1/step."""
    if n_classes < 1:
        raise ValueError("need at least one class")
    T = round(1.0 / step)
    if T < 1 or abs(T * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} does not evenly divide 1")
    rows: list[tuple[int, ...]] = []

    def compose(remaining: int, parts: int, prefix: tuple[int, ...]):
        if parts == 1:
            rows.append(prefix + (remaining,))
            return
        for units in range(remaining + 1):
            compose(remaining - units, parts - 1, prefix + (units,))

    compose(T, n_classes, ())
    return np.asarray(rows, dtype=np.float64) / T


@dataclass
class EnsembleWeights:
    """Chosen weight matrix (n_classifiers, n_classes) + selection metadata."""

    w: np.ndarray
    classes: np.ndarray
    validation_score: float
    step: float
    mode: str  # "exhaustive" | "ascent"

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        T = round(1.0 / self.step)
        units = self.w * T
        if not np.allclose(units, np.round(units), atol=1e-9):
            raise ValueError("weights are off the step grid")
        if not np.allclose(self.w.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("each classifier's weights must sum to 1")

    def as_dict(self) -> dict:
        return {
            "weights": [[round(float(x), 10) for x in row] for row in self.w],
            "classes": [int(c) for c in self.classes],
            "validation_macro_f1": self.validation_score,
            "step": self.step,
            "mode": self.mode,
        }


def ensemble_predict(weights: EnsembleWeights, probs) -> np.ndarray:
    """argmax_j sum_i w_ij * p_ij; ties go to the lowest class index."""
    p = probs.probs if isinstance(probs, ProbabilityMatrix) else np.asarray(probs, dtype=np.float64)
    single = p.ndim == 2
    if single:
        p = p[:, None, :]
    scores = np.einsum("mj,mnj->nj", weights.w, p)
    preds = weights.classes[np.argmax(scores, axis=1)]
    return preds[0] if single else preds


def _score_candidates(partial: np.ndarray, p_i: np.ndarray, rows: np.ndarray,
                      label_idx: np.ndarray, n_classes: int) -> np.ndarray:
    """Macro-F1 of every candidate row for one classifier given the fixed
    partial scores of the others. Vectorized over rows."""
    # (R, N, J) = (N, J) + (R, 1, J) * (N, J)
    totals = partial[None, :, :] + rows[:, None, :] * p_i[None, :, :]
    preds = totals.argmax(axis=2)
    scores = np.empty(len(rows))
    present = np.unique(label_idx)
    for r in range(len(rows)):
        scores[r] = _macro_f1_idx(preds[r], label_idx, present)
    return scores


def _macro_f1_idx(pred_idx: np.ndarray, label_idx: np.ndarray, present: np.ndarray) -> float:
    total = 0.0
    for cls in present:
        tp = int(((pred_idx == cls) & (label_idx == cls)).sum())
        fp = int(((pred_idx == cls) & (label_idx != cls)).sum())
        fn = int(((pred_idx != cls) & (label_idx == cls)).sum())
        denom = 2 * tp + fp + fn
        total += 2 * tp / denom if denom else 0.0
    return total / len(present)


def ensemble_weight_search(
    probs: ProbabilityMatrix,
    labels,
    step: float = 0.1,
    mode: str = "auto",
    budget: int = DEFAULT_BUDGET,
) -> EnsembleWeights:
    """Pick the weight grid point maximizing validation macro-F1.

    mode="exhaustive" guarantees grid-optimality and raises BudgetError
    when the combination count exceeds the budget; "ascent" runs
    deterministic coordinate ascent; "auto" picks exhaustive within budget
    and falls back to ascent (logged, and recorded in the result's mode).
    """
    probs.validate()
    M, N, J = probs.probs.shape
    labels = np.asarray(labels)
    if len(labels) != N:
        raise ValueError("labels do not match probability rows")
    label_idx = np.searchsorted(probs.classes, labels)
    if not np.array_equal(probs.classes[label_idx], labels):
        raise ValueError("labels outside the probability classes")
    rows = weight_rows(J, step)
    combos = len(rows) ** M
    if mode not in ("auto", "exhaustive", "ascent"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exhaustive" and combos > budget:
        raise BudgetError(
            f"exhaustive weight search needs {combos} combinations "
            f"(> budget {budget}); use mode='ascent' or raise the budget"
        )
    if mode == "auto":
        if combos <= budget:
            mode = "exhaustive"
        else:
            log.info(
                "weight grid has %d combinations (> budget %d); using coordinate ascent",
                combos, budget,
            )
            mode = "ascent"
    if mode == "exhaustive":
        w, score = _search_exhaustive(probs.probs, rows, label_idx)
    else:
        w, score = _search_ascent(probs.probs, rows, label_idx)
    return EnsembleWeights(w, probs.classes, score, step, mode)


def _search_exhaustive(p: np.ndarray, rows: np.ndarray, label_idx: np.ndarray):
    """Depth-first over classifiers' rows in lexicographic order; the last
    level is evaluated vectorized. Strict improvement keeps the first
    (lexicographically smallest) optimum."""
    M, N, J = p.shape
    present = np.unique(label_idx)
    best_score = -1.0
    best_combo: tuple[int, ...] | None = None

    def rec(level: int, partial: np.ndarray, chosen: tuple[int, ...]):
        nonlocal best_score, best_combo
        if level == M - 1:
            scores = _score_candidates(partial, p[level], rows, label_idx, J)
            r = int(np.argmax(scores))  # first max = lexicographically smallest
            if scores[r] > best_score:
                best_score = float(scores[r])
                best_combo = chosen + (r,)
            return
        for r in range(len(rows)):
            rec(level + 1, partial + rows[r][None, :] * p[level], chosen + (r,))

    rec(0, np.zeros((N, J)), ())
    assert best_combo is not None
    return rows[list(best_combo)], best_score


def _search_ascent(p: np.ndarray, rows: np.ndarray, label_idx: np.ndarray):
    """Coordinate ascent over classifiers; each sweep re-optimizes one
    row with the others fixed. A move is taken only if it improves the
    score or keeps it while lexicographically lowering the row, so the
    walk terminates at a deterministic local optimum."""
    M, N, J = p.shape
    # start from the most balanced grid row
    start = _balanced_row_index(rows)
    combo = [start] * M
    contrib = np.stack([rows[combo[i]][None, :] * p[i] for i in range(M)])  # (M, N, J)
    current = -1.0
    improved = True
    while improved:
        improved = False
        for i in range(M):
            partial = contrib.sum(axis=0) - contrib[i]
            scores = _score_candidates(partial, p[i], rows, label_idx, J)
            r = int(np.argmax(scores))
            better = scores[r] > current
            sideways = scores[r] == current and r < combo[i]
            if better or sideways:
                combo[i] = r
                contrib[i] = rows[r][None, :] * p[i]
                current = float(scores[r])
                improved = True
    return rows[combo], current


def _balanced_row_index(rows: np.ndarray) -> int:
    spread = rows.max(axis=1) - rows.min(axis=1)
    return int(np.lexsort((np.arange(len(rows)), spread))[0])
