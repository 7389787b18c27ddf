"""3D shapes as neural signed-distance fields."""

from .codec import (SDFEncodeResult, SDFHyper, decode_sdf, decode_sdf_params, encode_sdf,
                    overfit_sdf, sdf_model_config, sphere_validation_mse)
from .distance import (DistanceQuery, brute_force_distance, inside_mask, point_triangle_distance,
                       unsigned_distance)
from .mesh import (Mesh, MeshError, NonWatertightError, icosphere, is_watertight, load_mesh,
                   normalize, read_obj, read_off, sample_surface, save_mesh, write_obj, write_off)
from .sampling import SampledSDF, sample_sdf, signed_distance
from .surface import (EmptySurfaceError, chamfer, chamfer_points, extract_surface,
                      field_on_grid, nearest_sq, reconstruct)

__all__ = [
    "DistanceQuery", "EmptySurfaceError", "Mesh", "MeshError", "NonWatertightError",
    "SDFEncodeResult", "SDFHyper", "SampledSDF", "brute_force_distance", "chamfer",
    "chamfer_points", "decode_sdf", "decode_sdf_params", "encode_sdf", "extract_surface",
    "field_on_grid", "icosphere", "inside_mask", "is_watertight", "load_mesh", "nearest_sq",
    "normalize", "overfit_sdf", "point_triangle_distance", "read_obj", "read_off",
    "reconstruct", "sample_sdf", "sample_surface", "save_mesh", "sdf_model_config",
    "signed_distance", "sphere_validation_mse", "unsigned_distance", "write_obj", "write_off",
]
