"""Crop geometry: rectangles and the two deterministic crop planners.

Only plans are produced here; actual pixel resampling happens upstream of
this package.  Rounding rules are pinned (round-half-up for resize targets,
floor for center offsets) so plans are bit-reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def round_half_up(x: float) -> int:
    """round() with ties away from zero for positive x; no banker's rounding."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class CropRect:
    """Axis-aligned rectangle in pixel (or cell) coordinates."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"crop extent must be positive, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"crop offset must be nonnegative, got ({self.x}, {self.y})")

    def fits_within(self, width: int, height: int) -> bool:
        return self.x + self.w <= width and self.y + self.h <= height

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]


def random_resized_crop_plan(src: int, cfg, rng: np.random.Generator) -> CropRect:
    """Plan one random square crop of a square source image.

    Draws an area fraction uniformly from [cfg.crop_scale_min,
    cfg.crop_scale_max], converts it to a side length (round-half-up), and
    places the crop uniformly at random inside the source.  The side is
    clamped so the realized area fraction stays inside the configured range
    even after rounding.
    """
    lo, hi = cfg.crop_scale_min, cfg.crop_scale_max
    s = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
    side = round_half_up(src * math.sqrt(s))
    side_floor = int(math.ceil(src * math.sqrt(lo)))
    side = max(1, max(side_floor, min(side, src)))
    side = min(side, src)
    max_off = src - side
    x = int(rng.integers(0, max_off + 1))
    y = int(rng.integers(0, max_off + 1))
    return CropRect(x, y, side, side)


def resize_center_crop_plan(w: int, h: int, target: int = 512) -> tuple[int, int, CropRect]:
    """Plan scaling the shorter side to `target`, then a centered square crop.

    Returns (resized_w, resized_h, crop) where the crop is target x target and
    its offsets are the floor of half the excess along each axis.
    """
    if w < 1 or h < 1:
        raise ValueError(f"source extent must be positive, got {w}x{h}")
    shorter = min(w, h)
    resized_w = target if w == shorter else round_half_up(w * target / shorter)
    resized_h = target if h == shorter else round_half_up(h * target / shorter)
    # both sides equal: square source scales exactly
    if w == h:
        resized_w = resized_h = target
    off_x = (resized_w - target) // 2
    off_y = (resized_h - target) // 2
    return resized_w, resized_h, CropRect(off_x, off_y, target, target)
