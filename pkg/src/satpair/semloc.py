"""Semantic localization: sliding-window attention maps and their metrics.

A query-conditioned map is built by scoring scene windows against a text
embedding, averaging window scores into grid cells, shifting by the minimum,
and normalizing to unit mass.  Metrics: R_su (mass inside ground truth), R_as
(normalized probability-center shift, lower is better), R_da (one minus
normalized dispersion), and the combination
R_mi = w_su*R_su + w_as*(1 - R_as) + w_da*R_da.

Cell centers sit at integer+0.5 coordinates; distances normalize by the map
half-diagonal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .crops import CropRect
from .errors import (
    NoWindowsError,
    NotNormalizedError,
    ShapeMismatchError,
    WeightSumInvalidError,
    WindowTooLargeError,
)
from .matrix import EmbeddingMatrix


@dataclass
class SemLocMap:
    """Height x width grid of nonnegative float32 mass summing to 1."""

    mass: np.ndarray  # (height, width) float32

    def __post_init__(self):
        arr = np.ascontiguousarray(self.mass, dtype=np.float32)
        if arr.ndim != 2:
            raise ShapeMismatchError(f"map must be 2-D, got {arr.ndim}-D")
        if (arr < 0).any():
            raise ValueError("map mass must be nonnegative")
        total = float(arr.astype(np.float64).sum())
        if abs(total - 1.0) > 1e-5:
            raise ValueError(f"map mass sums to {total:.6g}, expected 1 within 1e-5")
        self.mass = arr

    @property
    def width(self) -> int:
        return self.mass.shape[1]

    @property
    def height(self) -> int:
        return self.mass.shape[0]

    @property
    def half_diagonal(self) -> float:
        return math.hypot(self.width, self.height) / 2.0


@dataclass
class GroundTruthRegion:
    """Union of axis-aligned rectangles in cell coordinates, with centroid."""

    rects: list[CropRect]
    bounds_w: int
    bounds_h: int
    centroid: tuple[float, float] = field(init=False)

    def __post_init__(self):
        if not self.rects:
            raise ValueError("ground truth needs at least one rectangle")
        for r in self.rects:
            if not r.fits_within(self.bounds_w, self.bounds_h):
                raise ValueError(
                    f"rect ({r.x},{r.y},{r.w},{r.h}) exceeds map bounds "
                    f"{self.bounds_w}x{self.bounds_h}"
                )
        mask = self.mask()
        ys, xs = np.nonzero(mask)
        if xs.size == 0:
            raise ValueError("ground truth union is empty")
        self.centroid = (float(xs.mean() + 0.5), float(ys.mean() + 0.5))

    def mask(self) -> np.ndarray:
        """Boolean (height, width) array: True inside the rectangle union."""
        m = np.zeros((self.bounds_h, self.bounds_w), dtype=bool)
        for r in self.rects:
            m[r.y : r.y + r.h, r.x : r.x + r.w] = True
        return m


@dataclass(frozen=True)
class SemLocWeights:
    """Nonnegative metric weights summing to 1."""

    w_su: float = 1.0 / 3.0
    w_as: float = 1.0 / 3.0
    w_da: float = 1.0 / 3.0

    def __post_init__(self):
        if min(self.w_su, self.w_as, self.w_da) < 0:
            raise WeightSumInvalidError(
                f"weights must be nonnegative, got ({self.w_su}, {self.w_as}, {self.w_da})"
            )
        total = self.w_su + self.w_as + self.w_da
        if abs(total - 1.0) > 1e-9:
            raise WeightSumInvalidError(f"weights sum to {total!r}, expected 1 within 1e-9")


def window_grid(scene_w: int, scene_h: int, window: int, stride: int) -> list[CropRect]:
    """Sliding windows at offsets 0, stride, 2*stride, ... per axis.

    The final offset along each axis is clamped flush to the far edge so the
    scene is fully covered even when stride does not divide the overhang.
    """
    if window > min(scene_w, scene_h):
        raise WindowTooLargeError(f"window {window} exceeds scene {scene_w}x{scene_h}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")

    def offsets(extent: int) -> list[int]:
        out = list(range(0, extent - window + 1, stride))
        if out[-1] != extent - window:
            out.append(extent - window)
        return out

    return [CropRect(x, y, window, window) for y in offsets(scene_h) for x in offsets(scene_w)]


def similarity_map(
    window_scores: list[tuple[CropRect, float]],
    scene_w: int,
    scene_h: int,
    cell: int,
) -> SemLocMap:
    """Rasterize window scores into a normalized cell map.

    Each cell takes the mean score of every window covering its top-left
    corner pixel block; the field is then shifted by its minimum and scaled to
    total mass 1.  A field that is constant (all zero after the shift)
    degrades to the uniform map.
    """
    if not window_scores:
        raise NoWindowsError("similarity_map needs at least one scored window")
    if cell < 1:
        raise ValueError(f"cell size must be >= 1, got {cell}")
    grid_w = max(1, scene_w // cell)
    grid_h = max(1, scene_h // cell)
    total = np.zeros((grid_h, grid_w), dtype=np.float64)
    count = np.zeros((grid_h, grid_w), dtype=np.int64)
    for rect, score in window_scores:
        if not math.isfinite(score):
            raise ValueError(f"window score {score!r} is not finite")
        # cells whose pixel block [cx*cell, (cx+1)*cell) intersects the window
        x0 = rect.x // cell
        y0 = rect.y // cell
        x1 = min(grid_w, (rect.x + rect.w + cell - 1) // cell)
        y1 = min(grid_h, (rect.y + rect.h + cell - 1) // cell)
        total[y0:y1, x0:x1] += score
        count[y0:y1, x0:x1] += 1
    field_vals = np.zeros_like(total)
    covered = count > 0
    field_vals[covered] = total[covered] / count[covered]
    field_vals -= field_vals.min()
    mass_total = field_vals.sum()
    if mass_total <= 0.0:
        field_vals = np.full((grid_h, grid_w), 1.0 / (grid_h * grid_w))
    else:
        field_vals /= mass_total
    return SemLocMap(field_vals.astype(np.float32))


def prob_centroid(m: SemLocMap) -> tuple[float, float]:
    """Mass-weighted mean of cell centers (cell (x, y) centers at x+0.5, y+0.5)."""
    mass = m.mass.astype(np.float64)
    xs = np.arange(m.width) + 0.5
    ys = np.arange(m.height) + 0.5
    cx = float((mass.sum(axis=0) * xs).sum())
    cy = float((mass.sum(axis=1) * ys).sum())
    return cx, cy


def r_su(m: SemLocMap, gt: GroundTruthRegion) -> float:
    """Fraction of total probability mass inside the ground-truth union.

    Normalized by the actual stored total (unit within the constructor's
    float32 tolerance) so the result is a genuine fraction in [0, 1].
    """
    if (gt.bounds_w, gt.bounds_h) != (m.width, m.height):
        raise ShapeMismatchError(
            f"ground truth bounds {gt.bounds_w}x{gt.bounds_h} vs map {m.width}x{m.height}"
        )
    mass = m.mass.astype(np.float64)
    inside = float(mass[gt.mask()].sum())
    return min(1.0, inside / float(mass.sum()))


def r_as(m: SemLocMap, gt: GroundTruthRegion) -> float:
    """Probability-center shift from the GT centroid over the half-diagonal, clamped to [0,1]."""
    px, py = prob_centroid(m)
    gx, gy = gt.centroid
    return min(1.0, math.hypot(px - gx, py - gy) / m.half_diagonal)


def r_da(m: SemLocMap) -> float:
    """One minus the mass-weighted mean distance from the probability center,
    normalized by the half-diagonal; higher means more concentrated attention."""
    px, py = prob_centroid(m)
    mass = m.mass.astype(np.float64)
    xs = (np.arange(m.width) + 0.5)[None, :] - px
    ys = (np.arange(m.height) + 0.5)[:, None] - py
    dist = np.sqrt(xs**2 + ys**2)
    spread = float((mass * dist).sum()) / m.half_diagonal
    return min(1.0, max(0.0, 1.0 - spread))


def r_mi(rsu: float, ras: float, rda: float, w: SemLocWeights) -> float:
    """Weighted combination w_su*R_su + w_as*(1 - R_as) + w_da*R_da."""
    for name, val in (("r_su", rsu), ("r_as", ras), ("r_da", rda)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {val}")
    return w.w_su * rsu + w.w_as * (1.0 - ras) + w.w_da * rda


def semloc_report(
    window_embeddings: list[tuple[CropRect, EmbeddingMatrix]] | list[tuple[CropRect, np.ndarray]],
    query_embedding: np.ndarray,
    gt: GroundTruthRegion,
    weights: SemLocWeights,
    scene_w: int,
    scene_h: int,
    cell: int,
) -> dict:
    """Score windows against the query, build the map, compute all four metrics.

    Window embeddings must be unit rows (one embedding per window); the query
    is a single unit vector.
    """
    query = np.asarray(query_embedding, dtype=np.float64).reshape(-1)
    qn = float(np.linalg.norm(query))
    if abs(qn - 1.0) > 1e-5:
        raise NotNormalizedError(f"query norm {qn:.6g}, expected 1 within 1e-5")
    scored: list[tuple[CropRect, float]] = []
    for rect, emb in window_embeddings:
        vec = emb.data.reshape(-1) if isinstance(emb, EmbeddingMatrix) else np.asarray(emb)
        vec = np.asarray(vec, dtype=np.float64).reshape(-1)
        n = float(np.linalg.norm(vec))
        if abs(n - 1.0) > 1e-5:
            raise NotNormalizedError(f"window at ({rect.x},{rect.y}) has norm {n:.6g}")
        scored.append((rect, float(vec @ query)))
    m = similarity_map(scored, scene_w, scene_h, cell)
    rsu = r_su(m, gt)
    ras = r_as(m, gt)
    rda = r_da(m)
    return {
        "r_su": rsu,
        "r_as": ras,
        "r_da": rda,
        "r_mi": r_mi(rsu, ras, rda, weights),
    }


def load_ground_truth(path: str | Path, bounds_w: int, bounds_h: int) -> GroundTruthRegion:
    """Read {"scene": id, "rects": [[x,y,w,h],...]} JSON; rects are in cell
    coordinates within the given map bounds."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    rects = [CropRect(int(x), int(y), int(w), int(h)) for x, y, w, h in obj["rects"]]
    return GroundTruthRegion(rects, bounds_w, bounds_h)


def write_pgm(m: SemLocMap, path: str | Path) -> None:
    """Dump the map as a binary P5 PGM, max-scaled to 8 bits, for eyeballing."""
    mass = m.mass.astype(np.float64)
    peak = mass.max()
    img = np.zeros_like(mass, dtype=np.uint8) if peak <= 0 else np.round(mass / peak * 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{m.width} {m.height}\n255\n".encode("ascii"))
        f.write(img.tobytes())
