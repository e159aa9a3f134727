"""Seeded random number generation.

All stochastic behavior in the package (shuffles, crop draws, splits, shot
sampling) flows through numpy's PCG64 bit generator, seeded explicitly.  PCG64
is a published, documented PCG-family algorithm with a platform-independent
stream, which is what makes the determinism contracts (same seed => identical
histories, splits, and crop plans) hold across machines.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Return a fresh PCG64-backed generator for the given seed."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_rng(seed: int, stream: int) -> np.random.Generator:
    """Return a generator for an independent named substream of a seed.

    Used where one configured seed drives several independent draws (e.g. head
    initialization vs. epoch shuffling) that must not interfere.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed).spawn(stream + 1)[stream]))
