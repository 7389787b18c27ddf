"""A seeded parametric family of small RGB images for desk-scale experiments.

Each image is a linear colour gradient plus two coloured Gaussian blobs with
random centres, widths and colours. Images are 8-bit.
"""

from __future__ import annotations

import numpy as np

from . import rng as _rng


def two_blob_image(g: np.random.Generator, size: int = 32) -> np.ndarray:
    u = (np.arange(size) + 0.5) / size
    yy, xx = np.meshgrid(u, u, indexing="ij")
    angle = g.uniform(0, 2 * np.pi)
    ramp = np.cos(angle) * (xx - 0.5) + np.sin(angle) * (yy - 0.5)
    c0, c1 = g.uniform(0.1, 0.9, 3), g.uniform(0.1, 0.9, 3)
    img = 0.5 * (c0 + c1) + ramp[..., None] * (c1 - c0)
    for _ in range(2):
        cx, cy = g.uniform(0.15, 0.85, 2)
        width = g.uniform(0.06, 0.2)
        amp = g.uniform(-0.5, 0.5, 3)
        blob = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * width ** 2))
        img = img + blob[..., None] * amp
    return np.rint(np.clip(img, 0, 1) * 255).astype(np.uint8)


def toy_dataset(n: int, seed: int = 0, size: int = 32, offset: int = 0) -> list[np.ndarray]:
    """Images ``offset .. offset+n-1`` of the family for ``seed``.

    Image ``i`` depends only on ``(seed, i)``, so disjoint index ranges give
    disjoint train/test splits.
    """
    out = []
    for i in range(offset, offset + n):
        g = _rng.generator(seed, (_rng.TOY_DATA << 32) | i)
        out.append(two_blob_image(g, size))
    return out
