import numpy as np
import pytest

from inrc.encoding import make_grid_3d
from inrc.nn import ModelConfig, mse
from inrc.sdf import (DistanceQuery, EmptySurfaceError, Mesh, MeshError, NonWatertightError,
                      SDFHyper, SampledSDF, brute_force_distance, chamfer, chamfer_points,
                      decode_sdf, encode_sdf, extract_surface, icosphere, inside_mask,
                      is_watertight, load_mesh, normalize, overfit_sdf, point_triangle_distance,
                      read_obj, read_off, sample_sdf, save_mesh, sdf_model_config,
                      signed_distance, write_obj, write_off)
from inrc.sdf.surface import _mesh_points


@pytest.fixture(scope="module")
def sphere():
    return icosphere(4)


def test_icosphere_shape(sphere):
    assert len(sphere.vertices) == 2562 and len(sphere.faces) == 5120
    assert np.allclose(np.linalg.norm(sphere.vertices, axis=1), 0.5)
    assert is_watertight(sphere)


def test_origin_and_vertex_distances(sphere):
    d = signed_distance(np.array([[0.0, 0, 0], sphere.vertices[17], [0.9, 0, 0]]), sphere)
    assert d[0] == pytest.approx(-0.5, abs=1e-2)
    assert d[1] == pytest.approx(0.0, abs=1e-12)
    assert d[2] == pytest.approx(0.4, abs=1e-2)


def _segment_oracle(p, a, b, c, n=400):
    """Dense barycentric sampling; an upper bound that converges to the distance."""
    u, v = np.meshgrid(np.linspace(0, 1, n), np.linspace(0, 1, n))
    keep = u + v <= 1
    q = a + u[keep, None] * (b - a) + v[keep, None] * (c - a)
    return np.sqrt(((q - p) ** 2).sum(1).min())


def test_point_triangle_regions():
    a, b, c = np.array([0.0, 0, 0]), np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
    cases = {(0.2, 0.2, 1.0): 1.0, (-1.0, -1.0, 0.0): np.sqrt(2), (0.5, -2.0, 0.0): 2.0,
             (2.0, 2.0, 0.0): np.sqrt(4.5), (-3.0, 0.5, 0.0): 3.0, (3.0, -1.0, 0.0): np.sqrt(5)}
    for p, want in cases.items():
        got = point_triangle_distance(np.array([p]), a[None], b[None], c[None])[0]
        assert got == pytest.approx(want, rel=1e-12)
    g = np.random.default_rng(0)
    for _ in range(20):
        p, a, b, c = g.normal(size=(4, 3))
        got = point_triangle_distance(p[None], a[None], b[None], c[None])[0]
        oracle = _segment_oracle(p, a, b, c)
        assert got <= oracle + 1e-12 and got == pytest.approx(oracle, abs=5e-3)


def test_accelerated_distance_equals_brute_force(sphere):
    g = np.random.default_rng(1)
    pts = np.concatenate([g.uniform(-1, 1, (600, 3)),
                          sphere.vertices[g.choice(2562, 400)] + g.normal(0, 0.01, (400, 3))])
    assert np.array_equal(DistanceQuery(sphere)(pts), brute_force_distance(pts, sphere))


def test_sign_consistency_on_convex_mesh(sphere):
    g = np.random.default_rng(2)
    p = g.uniform(-0.7, 0.7, (5000, 3))
    r = np.linalg.norm(p, axis=1)
    clear = np.abs(r - 0.5) > 2e-3  # facets sit inside the circumscribed sphere
    inside = inside_mask(p, sphere)
    assert np.array_equal(inside[clear], (r < 0.5)[clear])
    d = signed_distance(p[r < 0.45], sphere)
    assert np.all(d < 0)


def test_non_watertight_is_rejected(sphere):
    open_mesh = Mesh(sphere.vertices, sphere.faces[:-1])
    with pytest.raises(NonWatertightError):
        sample_sdf(open_mesh, 100)
    with pytest.raises(NonWatertightError):
        inside_mask(np.zeros((1, 3)), open_mesh)


def test_sampling_split_and_bounds(sphere):
    s = sample_sdf(sphere, 1000, seed=3)
    assert len(s) == 1000 and np.abs(s.points).max() <= 1.0
    assert np.abs(s.distances).max() <= 2 * np.sqrt(3)
    near = np.abs(np.linalg.norm(s.points[200:600], axis=1) - 0.5)
    assert np.median(near) < 0.02
    s2 = sample_sdf(sphere, 1000, seed=3)
    assert np.array_equal(s.points, s2.points) and np.array_equal(s.distances, s2.distances)


def test_normalize_idempotent_and_fits_cube():
    g = np.random.default_rng(4)
    m = Mesh(g.normal(size=(30, 3)) * 7 + 3, g.integers(0, 30, (20, 3)))
    n1 = normalize(m)
    assert np.abs(n1.vertices).max() == pytest.approx(0.5)
    assert np.allclose(n1.vertices.max(0) + n1.vertices.min(0), 0)
    assert np.array_equal(normalize(n1).vertices, n1.vertices)
    with pytest.raises(MeshError):
        normalize(Mesh(np.zeros((3, 3)), [[0, 1, 2]]))


def test_mesh_file_roundtrips(tmp_path, sphere):
    for suffix in (".obj", ".off"):
        back = load_mesh(save_mesh(tmp_path / f"m{suffix}", sphere))
        # coordinates are written with 9 significant digits
        assert np.allclose(back.vertices, sphere.vertices, rtol=0, atol=1e-9)
        assert np.array_equal(back.faces, sphere.faces)
    quad = read_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n")
    assert quad.faces.tolist() == [[0, 1, 2], [0, 2, 3]]
    assert read_off(write_off(quad)).faces.tolist() == quad.faces.tolist()
    assert read_obj(write_obj(quad)).faces.tolist() == quad.faces.tolist()
    with pytest.raises(MeshError):
        read_obj("v 0 0 0\nf 1 2 3\n")


def _signed_volume(m):
    t = m.triangles
    return np.einsum("ij,ij->i", t[:, 0], np.cross(t[:, 1], t[:, 2])).sum() / 6


def test_analytic_sphere_isosurface():
    R = 64
    field = np.linalg.norm(make_grid_3d(R).coords, axis=1).reshape(R, R, R) - 0.5
    m = extract_surface(field)
    assert np.abs(np.linalg.norm(m.vertices, axis=1) - 0.5).max() < 2 / R
    assert _signed_volume(m) == pytest.approx(4 / 3 * np.pi * 0.125, rel=1e-2)
    f = extract_surface(-field)
    assert np.allclose(np.sort(f.vertices, axis=0), np.sort(m.vertices, axis=0))
    assert _signed_volume(f) == pytest.approx(-_signed_volume(m))
    with pytest.raises(EmptySurfaceError):
        extract_surface(np.ones((16, 16, 16)))


def test_chamfer_properties(sphere):
    assert chamfer(sphere, sphere) < 1e-6
    other = icosphere(3, radius=0.45)
    assert chamfer(sphere, other) == chamfer(other, sphere)
    assert chamfer(sphere, other) == pytest.approx(0.05 ** 2, rel=0.1)


def test_parallel_squares():
    def square(z):
        v = [[0, 0, z], [1, 0, z], [1, 1, z], [0, 1, z]]
        return Mesh(np.array(v, dtype=float), [[0, 1, 2], [0, 2, 3]])
    for t in (0.05, 0.02):
        assert chamfer(square(0), square(t)) == pytest.approx(t * t, rel=0.05)


def test_chamfer_matches_double_loop():
    g = np.random.default_rng(5)
    a, b = g.normal(size=(100, 3)), g.normal(size=(100, 3))
    ab = [min(((p - q) ** 2).sum() for q in b) for p in a]
    ba = [min(((p - q) ** 2).sum() for q in a) for p in b]
    assert chamfer_points(a, b) == pytest.approx(0.5 * (np.mean(ab) + np.mean(ba)), rel=1e-14)


def test_surface_samples_depend_on_mesh_and_seed(sphere):
    assert np.array_equal(_mesh_points(sphere, 50, 0), _mesh_points(sphere, 50, 0))
    assert not np.array_equal(_mesh_points(sphere, 50, 0), _mesh_points(sphere, 50, 1))


def test_constant_distance_target_fits_through_bias():
    g = np.random.default_rng(6)
    s = SampledSDF(g.uniform(-1, 1, (500, 3)), np.full(500, 0.3))
    cfg = sdf_model_config(width=8, hidden_layers=1, n_freqs=2)
    res = overfit_sdf(s, cfg, SDFHyper(epochs=300, lr=1e-3, batch=100))
    assert res.best_loss < 1e-6 < res.trace[0]


def test_sdf_roundtrip_small(sphere):
    cfg = sdf_model_config(width=16, hidden_layers=2, n_freqs=4)
    hyper = SDFHyper(n_samples=4000, epochs=60, lr=1e-3, batch=1000, adaround_iters=50,
                     qat_epochs=3)
    res = encode_sdf(sphere, cfg, hyper)
    assert res.report["bytes"] == len(res.data)
    m = decode_sdf(res.data, 32)
    assert np.array_equal(decode_sdf(res.data, 32).vertices, m.vertices)
    assert chamfer(res.mesh, m, n=5000) < 1e-2
    with pytest.raises(ValueError):
        decode_sdf(res.data, 8)
    with pytest.raises(ValueError):
        overfit_sdf(res.samples, ModelConfig(width=4, hidden_layers=1))
