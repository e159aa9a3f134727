"""Image-text retrieval recall metrics with many-captions-per-image ground truth.

Rankings sort by descending score with ties broken by ascending candidate
index, so reports are identical across platforms.  Image-to-text counts a hit
when any ground-truth caption of the image lands in the top k; text-to-image
recall denominators count captions (the convention of the multi-caption
benchmarks this mirrors).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import KOutOfRangeError, NaNScoreError, ShapeMismatchError
from .matrix import EmbeddingMatrix, SimilarityMatrix, l2_normalize, similarity


@dataclass
class PairedSet:
    """Aligned image/text embeddings plus the image<->caption ground truth."""

    image_embeddings: EmbeddingMatrix
    text_embeddings: EmbeddingMatrix
    captions_of: dict[int, set[int]]
    image_of: dict[int, int] = field(init=False)

    def __post_init__(self):
        n_images = self.image_embeddings.rows
        n_texts = self.text_embeddings.rows
        image_of: dict[int, int] = {}
        for img, caps in self.captions_of.items():
            if not 0 <= img < n_images:
                raise ShapeMismatchError(f"image index {img} outside 0..{n_images - 1}")
            if not caps:
                raise ShapeMismatchError(f"image {img} has no captions")
            for cap in caps:
                if not 0 <= cap < n_texts:
                    raise ShapeMismatchError(f"caption index {cap} outside 0..{n_texts - 1}")
                if cap in image_of:
                    raise ShapeMismatchError(
                        f"caption {cap} claimed by images {image_of[cap]} and {img}"
                    )
                image_of[cap] = img
        if len(self.captions_of) != n_images:
            raise ShapeMismatchError(
                f"{len(self.captions_of)} images in ground truth, embeddings have {n_images}"
            )
        if len(image_of) != n_texts:
            raise ShapeMismatchError(
                f"{len(image_of)} captions in ground truth, embeddings have {n_texts}"
            )
        self.image_of = image_of

    @classmethod
    def from_caption_images(
        cls,
        image_embeddings: EmbeddingMatrix,
        text_embeddings: EmbeddingMatrix,
        caption_image_indices: list[int],
    ) -> "PairedSet":
        """Build from a per-caption image index list (the sidecar label column)."""
        captions_of: dict[int, set[int]] = {i: set() for i in range(image_embeddings.rows)}
        for cap, img in enumerate(caption_image_indices):
            if not 0 <= img < image_embeddings.rows:
                raise ShapeMismatchError(f"caption {cap} names image {img}, outside range")
            captions_of[img].add(cap)
        return cls(image_embeddings, text_embeddings, captions_of)


@dataclass
class RetrievalReport:
    """The six recalls (percent) and their arithmetic mean."""

    r1_i2t: float
    r5_i2t: float
    r10_i2t: float
    r1_t2i: float
    r5_t2i: float
    r10_t2i: float
    mean_recall: float

    def as_dict(self) -> dict:
        return {
            "r1_i2t": self.r1_i2t,
            "r5_i2t": self.r5_i2t,
            "r10_i2t": self.r10_i2t,
            "r1_t2i": self.r1_t2i,
            "r5_t2i": self.r5_t2i,
            "r10_t2i": self.r10_t2i,
            "mean_recall": self.mean_recall,
        }


def rank_row(scores: np.ndarray) -> np.ndarray:
    """Candidate indices by descending score; ties broken by ascending index."""
    arr = np.asarray(scores, dtype=np.float64).reshape(-1)
    if np.isnan(arr).any():
        raise NaNScoreError(f"NaN at position {int(np.nonzero(np.isnan(arr))[0][0])}")
    return np.argsort(-arr, kind="stable")


def recall_at_k(sim: SimilarityMatrix, pairs: PairedSet, k: int, direction: str) -> float:
    """R@k as a percentage, for direction "i2t" or "t2i".

    i2t: an image hits if any of its ground-truth captions is in its top-k
    ranked captions; denominator is the image count.  t2i: a caption hits if
    its unique image is in the caption's top-k ranked images; denominator is
    the caption count.
    """
    if k < 1:
        raise KOutOfRangeError(f"k must be >= 1, got {k}")
    if direction not in ("i2t", "t2i"):
        raise ValueError(f"direction must be 'i2t' or 't2i', got {direction!r}")
    n_images = pairs.image_embeddings.rows
    n_texts = pairs.text_embeddings.rows
    if sim.n_images != n_images or sim.n_texts != n_texts:
        raise ShapeMismatchError(
            f"similarity {sim.n_images}x{sim.n_texts} vs ground truth {n_images}x{n_texts}"
        )
    hits = 0
    if direction == "i2t":
        for i in range(n_images):
            top = rank_row(sim.scores[i, :])[:k]
            if pairs.captions_of[i].intersection(int(c) for c in top):
                hits += 1
        return 100.0 * hits / n_images
    for j in range(n_texts):
        top = rank_row(sim.scores[:, j])[:k]
        if pairs.image_of[j] in {int(i) for i in top}:
            hits += 1
    return 100.0 * hits / n_texts


def retrieval_report(
    images: EmbeddingMatrix,
    texts: EmbeddingMatrix,
    captions_of: dict[int, set[int]],
) -> RetrievalReport:
    """Normalize both sides, compute similarity, and report all six recalls.

    Inputs may arrive normalized or not; normalization here is idempotent.
    """
    images = images if images.normalized else l2_normalize(images)
    texts = texts if texts.normalized else l2_normalize(texts)
    normalized = PairedSet(images, texts, captions_of)
    sim = similarity(images, texts)
    recalls = {}
    for direction in ("i2t", "t2i"):
        for k in (1, 5, 10):
            recalls[f"r{k}_{direction}"] = recall_at_k(sim, normalized, k, direction)
    mean_recall = sum(recalls.values()) / 6.0
    return RetrievalReport(
        r1_i2t=recalls["r1_i2t"],
        r5_i2t=recalls["r5_i2t"],
        r10_i2t=recalls["r10_i2t"],
        r1_t2i=recalls["r1_t2i"],
        r5_t2i=recalls["r5_t2i"],
        r10_t2i=recalls["r10_t2i"],
        mean_recall=mean_recall,
    )
