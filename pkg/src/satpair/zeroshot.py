"""Zero-shot classification: prompt construction, argmax prediction, accuracy.

Class names are normalized (underscores to spaces, lowercased) before being
substituted into the template, since benchmark class lists vary in formatting.
Two template presets ship: the default "a satellite image of {class name}" and
the variant "the satellite image of {class name}".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadTemplateError,
    EmptyInputError,
    LengthMismatchError,
    NotNormalizedError,
    ShapeMismatchError,
)
from .matrix import EmbeddingMatrix

PLACEHOLDER = "{class name}"


@dataclass(frozen=True)
class PromptTemplate:
    """A pattern containing the literal placeholder "{class name}" exactly once."""

    pattern: str

    def __post_init__(self):
        count = self.pattern.count(PLACEHOLDER)
        if count != 1:
            raise BadTemplateError(
                f"template must contain {PLACEHOLDER!r} exactly once, found {count}: {self.pattern!r}"
            )

    def fill(self, class_name: str) -> str:
        return self.pattern.replace(PLACEHOLDER, class_name)


TEMPLATE_A = PromptTemplate("a satellite image of " + PLACEHOLDER)
TEMPLATE_THE = PromptTemplate("the satellite image of " + PLACEHOLDER)
TEMPLATES = {"a": TEMPLATE_A, "the": TEMPLATE_THE}
DEFAULT_TEMPLATE = TEMPLATE_A


@dataclass
class ZeroShotReport:
    """Per-dataset top-1 accuracies (percent) and their arithmetic mean."""

    accuracies: dict[str, float]
    average: float

    @classmethod
    def from_accuracies(cls, accuracies: dict[str, float]) -> "ZeroShotReport":
        if not accuracies:
            raise EmptyInputError("report needs at least one dataset")
        return cls(dict(accuracies), sum(accuracies.values()) / len(accuracies))

    def as_dict(self) -> dict:
        return {"accuracies": dict(self.accuracies), "average": self.average}


def normalize_class_name(name: str) -> str:
    """Underscores to spaces, lowercased, outer whitespace stripped."""
    return name.replace("_", " ").strip().lower()


def build_prompts(classes: list[str], template: PromptTemplate = DEFAULT_TEMPLATE) -> list[str]:
    """One prompt per class, order preserved; names normalized before filling."""
    if not classes:
        raise EmptyInputError("class list is empty")
    return [template.fill(normalize_class_name(c)) for c in classes]


def zeroshot_classify(image_emb: EmbeddingMatrix, class_emb: EmbeddingMatrix) -> np.ndarray:
    """Argmax class per image by dot-product similarity; ties to lowest index."""
    if not image_emb.normalized or not class_emb.normalized:
        raise NotNormalizedError("zero-shot classification expects normalized embeddings")
    if image_emb.dim != class_emb.dim:
        raise ShapeMismatchError(f"image dim {image_emb.dim} != class dim {class_emb.dim}")
    scores = image_emb.data.astype(np.float64) @ class_emb.data.astype(np.float64).T
    return np.argmax(scores, axis=1)  # np.argmax takes the first (lowest) index on ties


def top1_accuracy(pred: np.ndarray, labels: np.ndarray) -> float:
    """Percentage of predictions equal to the labels."""
    p = np.asarray(pred).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if p.shape[0] != y.shape[0]:
        raise LengthMismatchError(f"{p.shape[0]} predictions vs {y.shape[0]} labels")
    if p.shape[0] == 0:
        raise EmptyInputError("accuracy of an empty set is undefined")
    return 100.0 * float(np.count_nonzero(p == y)) / p.shape[0]
