"""Zero-level-set extraction and chamfer distance."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from skimage.measure import marching_cubes

from .. import rng as _rng
from ..encoding import make_grid_3d
from ..nn import ModelConfig, ParamSet, predict
from .mesh import Mesh, sample_surface


class EmptySurfaceError(ValueError):
    """The field has no zero crossing on the evaluation grid."""


def field_on_grid(params: ParamSet, config: ModelConfig, R: int) -> np.ndarray:
    """Network values on an ``R^3`` grid over ``[-1, 1]^3``, indexed ``[x, y, z]``."""
    grid = make_grid_3d(R)
    return predict(params, config, grid.coords)[:, 0].reshape(R, R, R)


def extract_surface(volume: np.ndarray) -> Mesh:
    """Zero isosurface of a volume sampled on the regular grid over ``[-1, 1]^3``.

    Faces are oriented with normals pointing towards increasing values
    (outwards for a field that is negative inside).
    """
    R = volume.shape[0]
    if not (volume.min() < 0 < volume.max()):
        raise EmptySurfaceError("field has no zero crossing on the grid")
    step = 2.0 / (R - 1)
    verts, faces, _, _ = marching_cubes(volume, level=0.0, spacing=(step,) * 3,
                                        gradient_direction="descent")
    return Mesh(verts.astype(np.float64) - 1.0, faces.astype(np.int64))


def reconstruct(params: ParamSet, config: ModelConfig, R: int = 128) -> Mesh:
    if R < 16:
        raise ValueError("resolution must be at least 16")
    return extract_surface(field_on_grid(params, config, R))


def _mesh_points(mesh: Mesh, n: int, seed: int) -> np.ndarray:
    # Seeded by the mesh content, so a mesh always gets the same samples no
    # matter which argument position it takes.
    h = int.from_bytes(mesh.content_hash()[:8], "little")
    g = _rng.generator(seed ^ h, _rng.SURFACE_SAMPLING)
    return sample_surface(mesh, n, g)


def nearest_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared distance from each row of ``a`` to its nearest row of ``b``."""
    _, idx = cKDTree(b).query(a)
    return np.sum((a - b[idx]) ** 2, axis=1)


def chamfer_points(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared nearest-neighbour distance, averaged over both directions."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("point sets must be non-empty")
    return 0.5 * (float(nearest_sq(a, b).mean()) + float(nearest_sq(b, a).mean()))


def chamfer(a: Mesh, b: Mesh, n: int = 30_000, seed: int = 0) -> float:
    return chamfer_points(_mesh_points(a, n, seed), _mesh_points(b, n, seed))
