"""Tensor-core contracts: normalization, similarity, and their invariants."""

from __future__ import annotations

import numpy as np
import pytest

from satpair import (
    DimMismatchError,
    EmbeddingMatrix,
    NotNormalizedError,
    ShapeMismatchError,
    ZeroRowError,
    l2_normalize,
    similarity,
)


def test_normalize_three_four_five():
    m = EmbeddingMatrix(np.array([[3.0, 4.0]], dtype=np.float32))
    out = l2_normalize(m)
    assert out.normalized
    np.testing.assert_allclose(out.data, [[0.6, 0.8]], rtol=0, atol=1e-7)


def test_normalize_unit_row_unchanged():
    m = EmbeddingMatrix(np.array([[1.0, 0.0, 0.0]], dtype=np.float32))
    out = l2_normalize(m)
    np.testing.assert_array_equal(out.data, m.data)


def test_normalize_ones_row():
    out = l2_normalize(EmbeddingMatrix(np.array([[1.0, 1.0]], dtype=np.float32)))
    np.testing.assert_allclose(out.data, [[0.7071068, 0.7071068]], atol=1e-6)


def test_normalize_zero_row_rejected():
    m = EmbeddingMatrix(np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.float32))
    with pytest.raises(ZeroRowError) as info:
        l2_normalize(m)
    assert info.value.row == 1


def test_normalize_idempotent():
    rng = np.random.default_rng(3)
    m = EmbeddingMatrix(rng.normal(size=(20, 7)).astype(np.float32))
    once = l2_normalize(m)
    twice = l2_normalize(once)
    np.testing.assert_allclose(twice.data, once.data, atol=1e-7)


def test_normalized_flag_validates_rows():
    with pytest.raises(NotNormalizedError):
        EmbeddingMatrix(np.array([[3.0, 4.0]], dtype=np.float32), normalized=True)


def test_embedding_matrix_requires_2d():
    with pytest.raises(ShapeMismatchError):
        EmbeddingMatrix(np.zeros(4, dtype=np.float32))


def test_similarity_identity_rows():
    eye = EmbeddingMatrix(np.eye(3, dtype=np.float32), normalized=True)
    sim = similarity(eye, eye)
    np.testing.assert_allclose(sim.scores, np.eye(3), atol=0)


def test_similarity_orthogonal():
    a = EmbeddingMatrix(np.array([[1.0, 0.0]], dtype=np.float32))
    b = EmbeddingMatrix(np.array([[0.0, 1.0]], dtype=np.float32))
    assert similarity(a, b).scores[0, 0] == 0.0


def test_similarity_dot_arithmetic():
    a = EmbeddingMatrix(np.array([[0.6, 0.8]], dtype=np.float32))
    b = EmbeddingMatrix(np.array([[0.8, 0.6]], dtype=np.float32))
    np.testing.assert_allclose(similarity(a, b).scores, [[0.96]], atol=1e-7)


def test_similarity_dim_mismatch():
    a = EmbeddingMatrix(np.zeros((1, 3), dtype=np.float32))
    b = EmbeddingMatrix(np.zeros((1, 4), dtype=np.float32))
    with pytest.raises(DimMismatchError):
        similarity(a, b)


def test_similarity_transpose_symmetry():
    rng = np.random.default_rng(11)
    a = EmbeddingMatrix(rng.normal(size=(5, 6)).astype(np.float32))
    b = EmbeddingMatrix(rng.normal(size=(4, 6)).astype(np.float32))
    ab = similarity(a, b).scores
    ba = similarity(b, a).scores
    np.testing.assert_allclose(ab, ba.T, atol=0)


def test_normalized_self_similarity_is_one():
    rng = np.random.default_rng(12)
    m = l2_normalize(EmbeddingMatrix(rng.normal(size=(8, 5)).astype(np.float32)))
    sim = similarity(m, m)
    np.testing.assert_allclose(np.diag(sim.scores), 1.0, atol=1e-5)


def test_normalized_scores_bounded():
    rng = np.random.default_rng(13)
    a = l2_normalize(EmbeddingMatrix(rng.normal(size=(10, 4)).astype(np.float32)))
    b = l2_normalize(EmbeddingMatrix(rng.normal(size=(9, 4)).astype(np.float32)))
    scores = similarity(a, b).scores
    assert scores.max() <= 1 + 1e-5 and scores.min() >= -1 - 1e-5
