"""The five base classifiers, implemented natively on numpy.

Every classifier exposes fit(X, y) and predict_proba(X) -> (n, J) rows
aligned to the sorted class values and summing to 1. Probability rules:
KNN uses neighbor class frequencies, CART leaf class frequencies, RF the
mean of its trees' leaf frequencies, LR the multinomial softmax, and SVM
one-vs-rest decision values pushed through a softmax. Given the same seed
and inputs, every fit/predict path is bit-reproducible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

CLASSIFIER_KINDS = ("knn", "cart", "svm", "lr", "rf")
# KNN, SVM, and LR consume standardized columns; the trees take raw values.
STANDARDIZED_KINDS = frozenset({"knn", "svm", "lr"})


@dataclass(frozen=True)
class Hyperparams:
    """One point of the hyperparameter grid (fields per classifier kind)."""

    knn_k: int = 5
    cart_min_leaf: int = 5
    svm_kernel: str = "linear"  # linear | poly | rbf
    svm_degree: int = 3
    svm_gamma: float = 0.1
    svm_cost: float = 1.0
    lr_l2: float = 1e-3
    lr_learning_rate: float = 0.5
    lr_iterations: int = 300
    rf_trees: int = 35
    rf_mtry: int | None = None  # None -> round(sqrt(n_features))

    def __post_init__(self):
        if self.knn_k < 1 or self.cart_min_leaf < 1 or self.rf_trees < 1:
            raise ValueError("counts must be >= 1")
        if self.rf_mtry is not None and self.rf_mtry < 1:
            raise ValueError("rf_mtry must be >= 1")
        if self.svm_kernel not in ("linear", "poly", "rbf"):
            raise ValueError(f"unknown SVM kernel {self.svm_kernel!r}")

    def but(self, **kwargs) -> "Hyperparams":
        return replace(self, **kwargs)


class Standardizer:
    """Per-column (x - mean) / std with population std; constant columns
    map to exactly 0. Parameters come from training rows only."""

    def __init__(self):
        self.mean: np.ndarray | None = None
        self.std: np.ndarray | None = None

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        self.mean = X.mean(axis=0)
        self.std = X.std(axis=0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.mean is None:
            raise RuntimeError("Standardizer not fitted")
        out = np.asarray(X, dtype=np.float64) - self.mean
        safe = np.where(self.std > 0, self.std, 1.0)
        out /= safe
        out[:, self.std == 0] = 0.0
        return out


def _class_frequencies(y_idx: np.ndarray, n_classes: int) -> np.ndarray:
    counts = np.bincount(y_idx, minlength=n_classes).astype(np.float64)
    return counts / counts.sum()


class KnnClassifier:
    def __init__(self, k: int):
        self.k = k

    def fit(self, X: np.ndarray, y: np.ndarray):
        self.X = np.asarray(X, dtype=np.float64)
        self.classes, self._y_idx = np.unique(y, return_inverse=True)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        k = min(self.k, len(self.X))
        d2 = ((X[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
        out = np.empty((len(X), len(self.classes)))
        train_order = np.arange(len(self.X))
        for i in range(len(X)):
            # stable tie-break: distance, then training-row index
            nearest = np.lexsort((train_order, d2[i]))[:k]
            out[i] = _class_frequencies(self._y_idx[nearest], len(self.classes))
        return out


@dataclass
class _TreeNode:
    probs: np.ndarray
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _best_split(X, y_idx, idx, features, n_classes, min_leaf):
    """Greedy gini split, vectorized over all candidate features at once;
    the earliest feature and threshold win ties (strict improvement
    required)."""
    n = len(idx)
    features = np.asarray(features, dtype=np.int64)
    values = X[np.ix_(idx, features)]  # (n, f)
    order = np.argsort(values, kind="stable", axis=0)
    xs = np.take_along_axis(values, order, axis=0)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y_idx[idx]] = 1.0
    cum = onehot[order.T].cumsum(axis=1)  # (f, n, J)
    total = cum[:, -1, :]

    pos = np.arange(1, n, dtype=np.float64)
    # split after position i puts i samples left; candidates only where
    # the value actually changes
    valid = (xs[1:] > xs[:-1]).T & (pos >= min_leaf) & (n - pos >= min_leaf)
    if not valid.any():
        return None
    left = cum[:, :-1, :]
    right = total[:, None, :] - left
    nl = pos[None, :, None]
    nr = n - nl
    gini_l = 1.0 - ((left / nl) ** 2).sum(axis=2)
    gini_r = 1.0 - ((right / nr) ** 2).sum(axis=2)
    weighted = (nl[:, :, 0] * gini_l + nr[:, :, 0] * gini_r) / n
    weighted[~valid] = np.inf
    flat = int(np.argmin(weighted))  # feature-major: earliest feature wins ties
    fi, j = divmod(flat, n - 1)
    a, b = xs[j, fi], xs[j + 1, fi]
    thr = (a + b) / 2.0
    if thr >= b:  # adjacent floats: keep the split consistent
        thr = a
    return (float(weighted[fi, j]), int(features[fi]), float(thr))


def _grow_tree(X, y_idx, idx, n_classes, min_leaf, rng, mtry, depth, max_depth):
    probs = _class_frequencies(y_idx[idx], n_classes)
    node = _TreeNode(probs=probs)
    if len(idx) < 2 * min_leaf or probs.max() == 1.0:
        return node
    if max_depth is not None and depth >= max_depth:
        return node
    d = X.shape[1]
    if mtry is None or mtry >= d:
        features = range(d)
    else:
        features = sorted(rng.choice(d, size=mtry, replace=False).tolist())
    split = _best_split(X, y_idx, idx, features, n_classes, min_leaf)
    if split is None:
        return node
    parent_gini = 1.0 - float((probs**2).sum())
    if split[0] >= parent_gini:  # no strict improvement
        return node
    _, f, thr = split
    go_left = X[idx, f] <= thr
    node.feature = f
    node.threshold = thr
    node.left = _grow_tree(X, y_idx, idx[go_left], n_classes, min_leaf, rng, mtry, depth + 1, max_depth)
    node.right = _grow_tree(X, y_idx, idx[~go_left], n_classes, min_leaf, rng, mtry, depth + 1, max_depth)
    return node


class CartClassifier:
    """Binary gini tree; leaves carry training class frequencies."""

    def __init__(self, min_leaf: int, max_depth: int | None = None):
        self.min_leaf = min_leaf
        self.max_depth = max_depth

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator | None = None,
            mtry: int | None = None, sample_idx: np.ndarray | None = None):
        X = np.asarray(X, dtype=np.float64)
        self.classes, y_idx = np.unique(y, return_inverse=True)
        idx = np.arange(len(X)) if sample_idx is None else sample_idx
        rng = rng or np.random.default_rng(0)
        self._root = _grow_tree(
            X, y_idx, idx, len(self.classes), self.min_leaf, rng, mtry, 0, self.max_depth
        )
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((len(X), len(self.classes)))
        for i, row in enumerate(X):
            node = self._root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.probs
        return out


class RandomForestClassifier:
    """Bagged gini trees with per-node feature subsampling; probabilities
    are the mean of the trees' leaf frequencies."""

    def __init__(self, n_trees: int = 35, mtry: int | None = None, min_leaf: int = 1, seed: int = 0):
        self.n_trees = n_trees
        self.mtry = mtry
        self.min_leaf = min_leaf
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes = np.unique(y)
        n, d = X.shape
        mtry = self.mtry if self.mtry is not None else max(1, round(d**0.5))
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        self._trees = []
        for ss in seeds:
            rng = np.random.default_rng(ss)
            boot = rng.integers(0, n, size=n)
            tree = CartClassifier(self.min_leaf)
            tree.fit(X, y, rng=rng, mtry=mtry, sample_idx=boot)
            self._trees.append(tree)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros((len(X), len(self.classes)))
        for tree in self._trees:
            probs = tree.predict_proba(X)
            # a bootstrap sample may miss a class entirely
            cols = np.searchsorted(self.classes, tree.classes)
            out[:, cols] += probs
        out /= out.sum(axis=1, keepdims=True)
        return out


def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


class LogisticRegressionClassifier:
    """Multinomial softmax regression trained by full-batch gradient
    descent on the L2-penalized mean cross-entropy (bias unpenalized)."""

    def __init__(self, l2: float = 1e-3, learning_rate: float = 0.5, iterations: int = 300):
        self.l2 = l2
        self.learning_rate = learning_rate
        self.iterations = iterations

    @staticmethod
    def _design(X: np.ndarray) -> np.ndarray:
        return np.hstack([np.ones((len(X), 1)), np.asarray(X, dtype=np.float64)])

    @staticmethod
    def loss_and_grad(W: np.ndarray, X1: np.ndarray, Y: np.ndarray, l2: float):
        """Mean cross-entropy + (l2/2)*||W[1:]||^2 and its gradient.

        X1 carries the bias column; Y is one-hot.
        """
        n = len(X1)
        P = _softmax(X1 @ W)
        eps = 1e-300
        loss = -float(np.log(np.clip((P * Y).sum(axis=1), eps, None)).mean())
        penalty = W.copy()
        penalty[0, :] = 0.0
        loss += 0.5 * l2 * float((penalty**2).sum())
        grad = X1.T @ (P - Y) / n + l2 * penalty
        return loss, grad

    def fit(self, X: np.ndarray, y: np.ndarray):
        self.classes, y_idx = np.unique(y, return_inverse=True)
        X1 = self._design(X)
        J = len(self.classes)
        Y = np.zeros((len(X1), J))
        Y[np.arange(len(X1)), y_idx] = 1.0
        W = np.zeros((X1.shape[1], J))
        self.loss_history = []
        for _ in range(self.iterations):
            loss, grad = self.loss_and_grad(W, X1, Y, self.l2)
            self.loss_history.append(loss)
            W -= self.learning_rate * grad
        self.W = W
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _softmax(self._design(X) @ self.W)


def _kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, degree: int, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    if kernel == "poly":
        return (A @ B.T + 1.0) ** degree
    if kernel == "rbf":
        d2 = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
        return np.exp(-gamma * np.maximum(d2, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


class _BinarySvm:
    """Simplified SMO for one binary subproblem (labels in {-1, +1}).

    Keeps the full error cache E = K (alpha*y) + b - y updated in O(n)
    per accepted step, so candidate screening is O(1). Stops after
    max_passes consecutive clean sweeps or the hard sweep cap, whichever
    comes first; the cap bounds runtime on noisy, non-separable data.
    """

    def __init__(self, C: float, tol: float = 1e-3, max_passes: int = 3, max_sweeps: int = 40):
        self.C = C
        self.tol = tol
        self.max_passes = max_passes
        self.max_sweeps = max_sweeps

    def fit(self, K: np.ndarray, y: np.ndarray, rng: np.random.Generator):
        n = len(y)
        alpha = np.zeros(n)
        ay = np.zeros(n)
        b = 0.0
        E = -y.astype(np.float64)
        passes = 0
        sweeps = 0
        while passes < self.max_passes and sweeps < self.max_sweeps:
            changed = 0
            for i in range(n):
                Ei = E[i]
                if not ((y[i] * Ei < -self.tol and alpha[i] < self.C)
                        or (y[i] * Ei > self.tol and alpha[i] > 0)):
                    continue
                j = int(rng.integers(0, n - 1))
                if j >= i:
                    j += 1
                Ej = E[j]
                ai_old, aj_old = alpha[i], alpha[j]
                if y[i] != y[j]:
                    L = max(0.0, aj_old - ai_old)
                    H = min(self.C, self.C + aj_old - ai_old)
                else:
                    L = max(0.0, ai_old + aj_old - self.C)
                    H = min(self.C, ai_old + aj_old)
                if L == H:
                    continue
                eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
                if eta >= 0:
                    continue
                aj = aj_old - y[j] * (Ei - Ej) / eta
                aj = min(H, max(L, aj))
                if abs(aj - aj_old) < 1e-5:
                    continue
                ai = ai_old + y[i] * y[j] * (aj_old - aj)
                b1 = b - Ei - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
                b2 = b - Ej - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
                if 0 < ai < self.C:
                    new_b = b1
                elif 0 < aj < self.C:
                    new_b = b2
                else:
                    new_b = (b1 + b2) / 2.0
                E += (y[i] * (ai - ai_old)) * K[i] + (y[j] * (aj - aj_old)) * K[j] + (new_b - b)
                alpha[i], alpha[j] = ai, aj
                ay[i], ay[j] = ai * y[i], aj * y[j]
                b = new_b
                changed += 1
            sweeps += 1
            passes = passes + 1 if changed == 0 else 0
        self.alpha_y = ay
        self.b = b
        return self

    def decision(self, K_test: np.ndarray) -> np.ndarray:
        return K_test @ self.alpha_y + self.b


class SvmClassifier:
    """One-vs-rest kernel SVM; class scores are the binary decision values
    and probabilities their softmax (a fixed calibration choice)."""

    def __init__(self, kernel: str = "linear", degree: int = 3, gamma: float = 0.1,
                 C: float = 1.0, seed: int = 0):
        self.kernel = kernel
        self.degree = degree
        self.gamma = gamma
        self.C = C
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray):
        self.X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes = np.unique(y)
        K = _kernel_matrix(self.X, self.X, self.kernel, self.degree, self.gamma)
        seeds = np.random.SeedSequence(self.seed).spawn(len(self.classes))
        self._machines = []
        for cls, ss in zip(self.classes, seeds):
            target = np.where(y == cls, 1.0, -1.0)
            machine = _BinarySvm(self.C)
            machine.fit(K, target, np.random.default_rng(ss))
            self._machines.append(machine)
        return self

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        K = _kernel_matrix(np.asarray(X, dtype=np.float64), self.X, self.kernel, self.degree, self.gamma)
        return np.column_stack([m.decision(K) for m in self._machines])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _softmax(self.decision_values(X))


# ---------------------------------------------------------------------------
# Uniform fit/predict entry point

@dataclass
class PredictResult:
    probs: np.ndarray  # (n_test, J)
    classes: np.ndarray
    degenerate: bool = False

    def predictions(self) -> np.ndarray:
        return self.classes[np.argmax(self.probs, axis=1)]


@dataclass
class ProbabilityMatrix:
    """Stacked per-classifier probabilities: (n_classifiers, n, n_classes)."""

    probs: np.ndarray
    classes: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 3:
            raise ValueError("expected (classifiers, instances, classes)")
        self.validate()

    def validate(self, atol: float = 1e-9) -> None:
        if (self.probs < -atol).any() or (self.probs > 1 + atol).any():
            raise ValueError("probabilities outside [0, 1]")
        sums = self.probs.sum(axis=2)
        if not np.allclose(sums, 1.0, atol=atol):
            raise ValueError("probability rows must sum to 1")


def build_classifier(kind: str, params: Hyperparams, seed: int = 0):
    if kind == "knn":
        return KnnClassifier(params.knn_k)
    if kind == "cart":
        return CartClassifier(params.cart_min_leaf)
    if kind == "rf":
        return RandomForestClassifier(params.rf_trees, params.rf_mtry, seed=seed)
    if kind == "lr":
        return LogisticRegressionClassifier(params.lr_l2, params.lr_learning_rate, params.lr_iterations)
    if kind == "svm":
        return SvmClassifier(params.svm_kernel, params.svm_degree, params.svm_gamma,
                             params.svm_cost, seed=seed)
    raise ValueError(f"unknown classifier kind {kind!r}")


def fit_predict(
    kind: str,
    params: Hyperparams,
    train_X: np.ndarray,
    train_y: Sequence[int],
    test_X: np.ndarray,
    seed: int = 0,
) -> PredictResult:
    """Fit one classifier and return its test probability rows.

    KNN/SVM/LR see standardized columns (parameters from the training rows
    only); the trees see raw values. Single-class training data yields a
    degenerate constant model, flagged.
    """
    train_y = np.asarray(train_y)
    if len(train_y) == 0:
        raise ValueError("empty training data")
    classes = np.unique(train_y)
    if len(classes) == 1:
        log.warning("single-class training data (%s); emitting degenerate model", classes[0])
        return PredictResult(np.ones((len(test_X), 1)), classes, degenerate=True)
    if kind in STANDARDIZED_KINDS:
        scaler = Standardizer().fit(train_X)
        train_X = scaler.transform(train_X)
        test_X = scaler.transform(test_X)
    model = build_classifier(kind, params, seed=seed)
    model.fit(train_X, train_y)
    return PredictResult(model.predict_proba(test_X), model.classes)
