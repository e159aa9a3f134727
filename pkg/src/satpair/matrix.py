"""Dense float32 embedding matrices: storage, L2 normalization, similarity.

Conventions fixed package-wide: row-major float32 storage, one embedding per
row, images as rows / texts as columns in similarity matrices.  Dot products
accumulate in float64 and are stored back as float32.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatchError, NotNormalizedError, ShapeMismatchError, ZeroRowError

NORM_TOL = 1e-5
ZERO_NORM_FLOOR = 1e-12


@dataclass
class EmbeddingMatrix:
    """N x D float32 matrix with a row-normalization flag.

    `data` is coerced to C-contiguous float32 on construction.  When
    `normalized` is set, every row must have unit Euclidean norm within
    NORM_TOL; all-zero rows are rejected outright in that case.
    """

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ShapeMismatchError(f"embedding data must be 2-D, got {arr.ndim}-D")
        self.data = arr
        if self.normalized:
            norms = np.linalg.norm(arr.astype(np.float64), axis=1)
            bad = np.nonzero(np.abs(norms - 1.0) > NORM_TOL)[0]
            if bad.size:
                raise NotNormalizedError(
                    f"row {bad[0]} has norm {norms[bad[0]]:.6g}, expected 1 within {NORM_TOL}"
                )

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.data[i]


@dataclass
class SimilarityMatrix:
    """Row-major float32 score matrix; rows are images, columns are texts."""

    scores: np.ndarray
    n_images: int = field(init=False)
    n_texts: int = field(init=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.scores, dtype=np.float32)
        if arr.ndim != 2:
            raise ShapeMismatchError(f"similarity scores must be 2-D, got {arr.ndim}-D")
        self.scores = arr
        self.n_images, self.n_texts = arr.shape


def row_norms(data: np.ndarray) -> np.ndarray:
    """Euclidean row norms, accumulated in float64."""
    return np.sqrt(np.sum(data.astype(np.float64) ** 2, axis=1))


def l2_normalize(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Divide every row by its Euclidean norm.

    Raises ZeroRowError for any row with norm <= 1e-12; silently producing
    NaNs here would poison every downstream evaluator.
    """
    norms = row_norms(m.data)
    bad = np.nonzero(norms <= ZERO_NORM_FLOOR)[0]
    if bad.size:
        raise ZeroRowError(int(bad[0]))
    out = (m.data.astype(np.float64) / norms[:, None]).astype(np.float32)
    return EmbeddingMatrix(out, normalized=True)


def l2_normalize_rows(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw-array normalization helper returning (unit rows, norms), in float64.

    Backbone for the training loop, which differentiates through the
    normalization and wants the norms around for the backward pass.
    """
    norms = np.sqrt(np.sum(np.asarray(data, dtype=np.float64) ** 2, axis=1))
    bad = np.nonzero(norms <= ZERO_NORM_FLOOR)[0]
    if bad.size:
        raise ZeroRowError(int(bad[0]))
    return np.asarray(data, dtype=np.float64) / norms[:, None], norms


def l2_normalize_backward(unit: np.ndarray, norms: np.ndarray, d_unit: np.ndarray) -> np.ndarray:
    """Chain-rule through y = x / ||x||: returns dL/dx given dL/dy.

    `unit` and `norms` are the forward outputs of l2_normalize_rows.
    """
    inner = np.sum(d_unit * unit, axis=1, keepdims=True)
    return (d_unit - unit * inner) / norms[:, None]


def similarity(images: EmbeddingMatrix, texts: EmbeddingMatrix) -> SimilarityMatrix:
    """All-pairs dot products: scores[i][j] = images.row(i) . texts.row(j)."""
    if images.dim != texts.dim:
        raise DimMismatchError(f"image dim {images.dim} != text dim {texts.dim}")
    scores = images.data.astype(np.float64) @ texts.data.astype(np.float64).T
    return SimilarityMatrix(scores.astype(np.float32))
