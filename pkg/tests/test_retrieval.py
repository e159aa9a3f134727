"""Retrieval metrics against a brute-force full-sort oracle."""

from __future__ import annotations

import numpy as np
import pytest

from satpair import (
    EmbeddingMatrix,
    KOutOfRangeError,
    NaNScoreError,
    PairedSet,
    ShapeMismatchError,
    SimilarityMatrix,
    l2_normalize,
    rank_row,
    recall_at_k,
    retrieval_report,
    similarity,
)


def _oracle_recall(scores: np.ndarray, pairs: PairedSet, k: int, direction: str) -> float:
    """Independent re-ranking: full sort with explicit (score, index) keys."""
    hits = 0
    if direction == "i2t":
        n = scores.shape[0]
        for i in range(n):
            ranked = sorted(range(scores.shape[1]), key=lambda j: (-scores[i, j], j))
            if set(ranked[:k]) & pairs.captions_of[i]:
                hits += 1
        return 100.0 * hits / n
    n = scores.shape[1]
    for j in range(n):
        ranked = sorted(range(scores.shape[0]), key=lambda i: (-scores[i, j], i))
        if pairs.image_of[j] in ranked[:k]:
            hits += 1
    return 100.0 * hits / n


def _random_instance(seed: int):
    rng = np.random.default_rng(seed)
    n_images = int(rng.integers(2, 101))
    dim = int(rng.integers(3, 9))
    caption_images = []
    for i in range(n_images):
        caption_images.extend([i] * int(rng.integers(1, 6)))
    caption_images = caption_images[:500]
    # every image keeps at least one caption after the cut
    present = set(caption_images)
    n_images = max(present) + 1
    images = l2_normalize(EmbeddingMatrix(rng.normal(size=(n_images, dim)).astype(np.float32)))
    texts = l2_normalize(
        EmbeddingMatrix(rng.normal(size=(len(caption_images), dim)).astype(np.float32))
    )
    pairs = PairedSet.from_caption_images(images, texts, caption_images)
    return images, texts, pairs


def test_rank_row_hand_sort():
    np.testing.assert_array_equal(rank_row(np.array([0.1, 0.9, 0.5])), [1, 2, 0])


def test_rank_row_all_equal_identity():
    np.testing.assert_array_equal(rank_row(np.array([0.3, 0.3, 0.3])), [0, 1, 2])


def test_rank_row_partial_tie():
    np.testing.assert_array_equal(rank_row(np.array([0.5, 0.5, 0.9])), [2, 0, 1])


def test_rank_row_rejects_nan():
    with pytest.raises(NaNScoreError):
        rank_row(np.array([0.1, np.nan]))


def _simple_pairs(n):
    images = EmbeddingMatrix(np.eye(n, dtype=np.float32), normalized=True)
    texts = EmbeddingMatrix(np.eye(n, dtype=np.float32), normalized=True)
    return PairedSet.from_caption_images(images, texts, list(range(n)))


def test_recall_identity_diagonal():
    pairs = _simple_pairs(3)
    sim = SimilarityMatrix(np.eye(3, dtype=np.float32))
    assert recall_at_k(sim, pairs, 1, "i2t") == 100.0
    assert recall_at_k(sim, pairs, 1, "t2i") == 100.0


def test_recall_hand_ranked_2x2():
    pairs = _simple_pairs(2)
    sim = SimilarityMatrix(np.array([[0.9, 0.1], [0.8, 0.2]], dtype=np.float32))
    # i2t: image 0 ranks caption 0 first (hit); image 1 also ranks caption 0 first (miss)
    assert recall_at_k(sim, pairs, 1, "i2t") == 50.0
    # t2i: caption 0's best image is 0 (hit); caption 1's best image is 1 (hit)
    assert recall_at_k(sim, pairs, 1, "t2i") == 100.0


def test_recall_k_covers_everything():
    pairs = _simple_pairs(4)
    rng = np.random.default_rng(1)
    sim = SimilarityMatrix(rng.normal(size=(4, 4)).astype(np.float32))
    assert recall_at_k(sim, pairs, 4, "i2t") == 100.0
    assert recall_at_k(sim, pairs, 99, "t2i") == 100.0


def test_recall_k_out_of_range():
    pairs = _simple_pairs(2)
    sim = SimilarityMatrix(np.eye(2, dtype=np.float32))
    with pytest.raises(KOutOfRangeError):
        recall_at_k(sim, pairs, 0, "i2t")


def test_recall_shape_mismatch():
    pairs = _simple_pairs(2)
    sim = SimilarityMatrix(np.eye(3, dtype=np.float32))
    with pytest.raises(ShapeMismatchError):
        recall_at_k(sim, pairs, 1, "i2t")


def test_report_perfect_alignment():
    n = 8
    images = EmbeddingMatrix(np.eye(n, dtype=np.float32))
    texts = EmbeddingMatrix(np.eye(n, dtype=np.float32))
    rep = retrieval_report(images, texts, {i: {i} for i in range(n)})
    assert rep.mean_recall == 100.0
    assert rep.r1_i2t == rep.r10_t2i == 100.0


def test_report_mean_is_arithmetic_mean():
    images, texts, pairs = _random_instance(33)
    rep = retrieval_report(images, texts, pairs.captions_of)
    six = [rep.r1_i2t, rep.r5_i2t, rep.r10_i2t, rep.r1_t2i, rep.r5_t2i, rep.r10_t2i]
    assert abs(rep.mean_recall - sum(six) / 6) < 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_recall_matches_oracle(seed):
    images, texts, pairs = _random_instance(seed)
    sim = similarity(images, texts)
    for k in (1, 5, 10):
        for direction in ("i2t", "t2i"):
            ours = recall_at_k(sim, pairs, k, direction)
            oracle = _oracle_recall(sim.scores.astype(np.float64), pairs, k, direction)
            assert ours == oracle


def test_recall_monotone_in_k():
    images, texts, pairs = _random_instance(77)
    sim = similarity(images, texts)
    for direction in ("i2t", "t2i"):
        values = [recall_at_k(sim, pairs, k, direction) for k in range(1, 12)]
        assert all(a <= b for a, b in zip(values, values[1:]))


def test_recall_invariant_under_monotone_transform():
    images, texts, pairs = _random_instance(5)
    sim = similarity(images, texts)
    transformed = SimilarityMatrix((3.0 * sim.scores + 7.0).astype(np.float32))
    for k in (1, 5, 10):
        for direction in ("i2t", "t2i"):
            assert recall_at_k(sim, pairs, k, direction) == recall_at_k(
                transformed, pairs, k, direction
            )


def test_recall_invariant_under_joint_permutation():
    images, texts, pairs = _random_instance(8)
    sim = similarity(images, texts)
    rng = np.random.default_rng(0)
    perm = rng.permutation(texts.rows)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    texts_p = EmbeddingMatrix(texts.data[perm], normalized=True)
    caption_images_p = [0] * texts.rows
    for new_pos in range(texts.rows):
        caption_images_p[new_pos] = pairs.image_of[int(perm[new_pos])]
    pairs_p = PairedSet.from_caption_images(images, texts_p, caption_images_p)
    sim_p = similarity(images, texts_p)
    for k in (1, 5, 10):
        assert recall_at_k(sim, pairs, k, "i2t") == recall_at_k(sim_p, pairs_p, k, "i2t")
        assert recall_at_k(sim, pairs, k, "t2i") == recall_at_k(sim_p, pairs_p, k, "t2i")


def test_paired_set_validates_ground_truth():
    images = EmbeddingMatrix(np.eye(2, dtype=np.float32))
    texts = EmbeddingMatrix(np.eye(3, dtype=np.float32))
    with pytest.raises(ShapeMismatchError):
        PairedSet(images, texts, {0: {0, 1}})  # image 1 missing from the map
    with pytest.raises(ShapeMismatchError):
        PairedSet(images, texts, {0: {0, 1}, 1: {1, 2}})  # caption 1 claimed twice
