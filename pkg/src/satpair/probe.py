"""Linear probing and k-NN evaluation over frozen vision features.

The probe is multinomial logistic regression minimizing

    mean cross-entropy + ||W||^2 / (2 * l2_strength * n)

with the bias unregularized — the objective of the standard library probe the
protocol names, solved here by deterministic full-batch gradient descent with
a backtracking (Armijo) line search so results are reproducible bit-for-bit.
k-NN is exact Euclidean search with pinned tie rules: equal distances break by
ascending train index, vote ties by lowest class index.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ClassTooSmallError,
    ConvergenceWarning,
    EmptyInputError,
    InsufficientShotsError,
    KTooLargeError,
    ShapeMismatchError,
)
from .matrix import EmbeddingMatrix
from .rng import make_rng

FULL = "full"
SHOT_CHOICES = (1, 4, 8, 16, 32)


@dataclass
class LabeledFeatures:
    """Feature rows with one class index per row."""

    features: EmbeddingMatrix
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        y = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if y.shape[0] != self.features.rows:
            raise ShapeMismatchError(f"{self.features.rows} rows but {y.shape[0]} labels")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise ShapeMismatchError(
                f"labels span [{y.min()}, {y.max()}], outside [0, {self.n_classes})"
            )
        self.labels = y

    def subset(self, indices: np.ndarray) -> "LabeledFeatures":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledFeatures(
            EmbeddingMatrix(self.features.data[idx], normalized=False),
            self.labels[idx],
            self.n_classes,
        )


@dataclass
class LogRegModel:
    """Affine scorer: scores = X @ weight.T + bias."""

    weight: np.ndarray  # (n_classes, dim)
    bias: np.ndarray  # (n_classes,)
    l2_strength: float

    def __post_init__(self):
        w = np.ascontiguousarray(self.weight, dtype=np.float64)
        b = np.ascontiguousarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ShapeMismatchError(f"weight {w.shape} and bias {b.shape} are inconsistent")
        self.weight, self.bias = w, b


@dataclass
class ProbeConfig:
    """Probe protocol knobs: shots, split ratio, seed, optimizer tolerances."""

    shots: int | str = FULL
    split_ratio: float = 0.8
    seed: int = 0
    l2_strength: float = 1.0
    max_iter: int = 1000
    grad_tol: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError(f"split_ratio must lie in (0, 1), got {self.split_ratio}")
        if self.shots != FULL:
            if int(self.shots) < 1:
                raise ValueError(f"shots must be >= 1 or '{FULL}', got {self.shots}")
            self.shots = int(self.shots)
        if self.l2_strength <= 0:
            raise ValueError(f"l2_strength must be > 0, got {self.l2_strength}")


def stratified_split(labels: np.ndarray, ratio: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-class split into train/test index arrays.

    Each class contributes round(ratio * count) members to train (at least one
    on each side), drawn from a seeded shuffle.  Output arrays are sorted,
    disjoint, and exhaustive.
    """
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if y.size == 0:
        raise EmptyInputError("cannot split an empty label set")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    rng = make_rng(seed)
    train_parts: list[np.ndarray] = []
    test_parts: list[np.ndarray] = []
    for cls in np.unique(y):
        members = np.nonzero(y == cls)[0]
        if members.size < 2:
            raise ClassTooSmallError(int(cls), int(members.size))
        n_train = int(math.floor(ratio * members.size + 0.5))
        n_train = max(1, min(members.size - 1, n_train))
        shuffled = rng.permutation(members)
        train_parts.append(shuffled[:n_train])
        test_parts.append(shuffled[n_train:])
    return np.sort(np.concatenate(train_parts)), np.sort(np.concatenate(test_parts))


def sample_k_shot(train: LabeledFeatures, k: int, seed: int) -> LabeledFeatures:
    """Exactly k seeded draws per class, in ascending class order."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rng = make_rng(seed)
    keep: list[np.ndarray] = []
    for cls in range(train.n_classes):
        members = np.nonzero(train.labels == cls)[0]
        if members.size < k:
            raise InsufficientShotsError(int(cls), int(members.size), k)
        chosen = rng.permutation(members)[:k]
        keep.append(np.sort(chosen))
    return train.subset(np.concatenate(keep))


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def logreg_objective(
    w: np.ndarray, b: np.ndarray, x: np.ndarray, y: np.ndarray, l2_strength: float
) -> float:
    """Mean cross-entropy plus ||w||^2 / (2 * l2_strength * n); bias unregularized."""
    n = x.shape[0]
    z = x @ w.T + b
    z -= z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    ce = float(np.mean(log_norm - z[np.arange(n), y]))
    return ce + float((w * w).sum()) / (2.0 * l2_strength * n)


def _logreg_grad(
    w: np.ndarray, b: np.ndarray, x: np.ndarray, y: np.ndarray, l2_strength: float
) -> tuple[np.ndarray, np.ndarray]:
    n = x.shape[0]
    p = _softmax_rows(x @ w.T + b)
    p[np.arange(n), y] -= 1.0
    p /= n
    return p.T @ x + w / (l2_strength * n), p.sum(axis=0)


def logreg_fit(data: LabeledFeatures, cfg: ProbeConfig) -> LogRegModel:
    """Full-batch gradient descent with Armijo backtracking on the probe objective.

    Runs until the gradient infinity-norm drops below cfg.grad_tol or
    cfg.max_iter iterations; hitting the cap emits a ConvergenceWarning but
    still returns the last iterate.  The objective value never increases along
    accepted steps (the line search guarantees it).
    """
    if data.n_classes < 2:
        raise ValueError(f"logistic regression needs >= 2 classes, got {data.n_classes}")
    if data.features.rows < data.n_classes:
        raise EmptyInputError(
            f"{data.features.rows} rows cannot cover {data.n_classes} classes"
        )
    x = data.features.data.astype(np.float64)
    y = data.labels
    w = np.zeros((data.n_classes, x.shape[1]))
    b = np.zeros(data.n_classes)
    obj = logreg_objective(w, b, x, y, cfg.l2_strength)
    step = 1.0
    armijo_c = 1e-4
    grad_norm = math.inf
    converged = False
    for _ in range(cfg.max_iter):
        gw, gb = _logreg_grad(w, b, x, y, cfg.l2_strength)
        grad_norm = max(float(np.abs(gw).max()), float(np.abs(gb).max()))
        if grad_norm < cfg.grad_tol:
            converged = True
            break
        g_sq = float((gw * gw).sum() + (gb * gb).sum())
        step = min(step * 2.0, 1e6)  # optimistic growth, then backtrack
        accepted = False
        while step >= 1e-18:
            w_new = w - step * gw
            b_new = b - step * gb
            obj_new = logreg_objective(w_new, b_new, x, y, cfg.l2_strength)
            if obj_new <= obj - armijo_c * step * g_sq:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # no descent step representable; already at numerical optimum
        w, b, obj = w_new, b_new, obj_new
    if not converged:
        warnings.warn(
            f"logreg_fit stopped with gradient norm {grad_norm:.3g} above tol {cfg.grad_tol:g}",
            ConvergenceWarning,
        )
    return LogRegModel(w, b, cfg.l2_strength)


def logreg_predict(model: LogRegModel, x: EmbeddingMatrix) -> np.ndarray:
    """Argmax of affine scores; ties resolve to the lowest class index."""
    if x.dim != model.weight.shape[1]:
        raise ShapeMismatchError(f"feature dim {x.dim} != model dim {model.weight.shape[1]}")
    scores = x.data.astype(np.float64) @ model.weight.T + model.bias
    return np.argmax(scores, axis=1)


def knn_classify(
    train: LabeledFeatures,
    queries: EmbeddingMatrix,
    k: int = 20,
    metric: str = "euclidean",
) -> np.ndarray:
    """Exact k-nearest-neighbor majority vote.

    Distance ties break by ascending train index (stable argsort); vote ties
    break by lowest class index.  metric is "euclidean" (default) or "cosine"
    (distance = 1 - cosine similarity).
    """
    if k < 1 or k > train.features.rows:
        raise KTooLargeError(f"k={k} with {train.features.rows} training rows")
    if queries.dim != train.features.dim:
        raise ShapeMismatchError(
            f"query dim {queries.dim} != train dim {train.features.dim}"
        )
    if metric not in ("euclidean", "cosine"):
        raise ValueError(f"metric must be 'euclidean' or 'cosine', got {metric!r}")
    xt = train.features.data.astype(np.float64)
    xq = queries.data.astype(np.float64)
    if metric == "euclidean":
        # squared distances suffice for ranking and avoid the sqrt
        d = (
            (xq**2).sum(axis=1, keepdims=True)
            - 2.0 * xq @ xt.T
            + (xt**2).sum(axis=1)[None, :]
        )
    else:
        qn = np.linalg.norm(xq, axis=1, keepdims=True)
        tn = np.linalg.norm(xt, axis=1)[None, :]
        d = 1.0 - (xq @ xt.T) / np.maximum(qn * tn, 1e-30)
    out = np.empty(xq.shape[0], dtype=np.int64)
    for qi in range(xq.shape[0]):
        order = np.argsort(d[qi], kind="stable")[:k]
        votes = np.bincount(train.labels[order], minlength=train.n_classes)
        out[qi] = int(np.argmax(votes))  # argmax takes the lowest class on vote ties
    return out
