"""Seeded random streams.

Every random draw in the codec goes through :func:`generator`, which wraps
numpy's Philox4x64-10 counter-based bit generator. Philox output depends only
on ``(key, counter)``, so a stream is fully described by its 64-bit seed and a
small integer stream tag and reproduces bit-for-bit on any platform that
implements Philox4x64-10.

Stream tags keep logically separate consumers (weight init, Gaussian
frequencies, dataset shuffling, ...) from sharing a counter sequence.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# stream tags; the value is placed in the second key word
INIT = 1
GAUSSIAN_ENCODING = 2
SHUFFLE = 3
VALIDATION = 4
ADAROUND = 5
SDF_SAMPLING = 6
SURFACE_SAMPLING = 7
TOY_DATA = 8


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    key = np.array([seed & MASK64, stream & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def box_muller(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normal draws via the Box-Muller transform.

    Used instead of ``rng.standard_normal`` (ziggurat) so that the mapping from
    uniforms to normals is a two-line formula any decoder can reproduce.
    """
    n = int(np.prod(shape))
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:n].reshape(shape)
