"""Signed-distance training samples around a watertight mesh."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as _rng
from .distance import DistanceQuery, inside_mask
from .mesh import Mesh, NonWatertightError, is_watertight, sample_surface

DEFAULT_SPLIT = (0.2, 0.4, 0.4)  # uniform, near surface, farther from surface
DEFAULT_SIGMAS = (0.01, 0.1)
MAX_ABS_DISTANCE = 2 * np.sqrt(3)


@dataclass(frozen=True)
class SampledSDF:
    points: np.ndarray  # (n, 3) in [-1, 1]^3
    distances: np.ndarray  # (n,), negative inside

    def __post_init__(self):
        if self.points.shape != (len(self.distances), 3):
            raise ValueError("points must be (n, 3) with one distance each")

    def __len__(self) -> int:
        return len(self.distances)

    def subset(self, idx) -> "SampledSDF":
        return SampledSDF(self.points[idx], self.distances[idx])


def signed_distance(points: np.ndarray, mesh: Mesh, check: bool = True) -> np.ndarray:
    d = DistanceQuery(mesh)(points)
    return np.where(inside_mask(points, mesh, check=check), -d, d)


def sample_sdf(mesh: Mesh, n: int = 100_000, seed: int = 0, split=DEFAULT_SPLIT,
               sigmas=DEFAULT_SIGMAS) -> SampledSDF:
    """Uniform cube samples plus Gaussian-perturbed surface samples.

    ``split`` gives the fractions (uniform, sigma_0, sigma_1). Points are
    clipped to the cube ``[-1, 1]^3``.
    """
    if not is_watertight(mesh):
        raise NonWatertightError("mesh is not watertight; inside/outside is ambiguous")
    if n < 1:
        raise ValueError("n must be positive")
    if len(split) != 1 + len(sigmas) or not np.isclose(sum(split), 1.0):
        raise ValueError("split must have one fraction per group and sum to 1")
    g = _rng.generator(seed, _rng.SDF_SAMPLING)
    counts = [int(round(f * n)) for f in split[1:]]
    n_uniform = n - sum(counts)
    parts = [g.uniform(-1.0, 1.0, (n_uniform, 3))]
    for count, sigma in zip(counts, sigmas):
        surf = sample_surface(mesh, count, g)
        parts.append(surf + g.normal(0.0, sigma, surf.shape))
    points = np.clip(np.concatenate(parts), -1.0, 1.0)
    return SampledSDF(points, signed_distance(points, mesh, check=False))
