"""Triangle meshes: OBJ/OFF I/O, normalization, watertightness, surface sampling."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    pass


class NonWatertightError(MeshError):
    """Inside/outside is undefined, so signed distances cannot be computed."""


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (n, 3) float64
    faces: np.ndarray  # (m, 3) int64

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64)
        f = np.ascontiguousarray(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3 or f.ndim != 2 or f.shape[1] != 3:
            raise MeshError("vertices must be (n, 3) and faces (m, 3)")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def triangles(self) -> np.ndarray:
        """(m, 3, 3) corner coordinates."""
        return self.vertices[self.faces]

    def areas(self) -> np.ndarray:
        t = self.triangles
        return 0.5 * np.linalg.norm(np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1)

    def content_hash(self) -> bytes:
        h = hashlib.blake2b(digest_size=16)
        h.update(self.vertices.astype("<f8").tobytes())
        h.update(self.faces.astype("<i8").tobytes())
        return h.digest()

    def flipped(self) -> "Mesh":
        return Mesh(self.vertices, self.faces[:, ::-1])


def read_obj(text: str) -> Mesh:
    """Vertices and faces of an OBJ file; polygons are fan-triangulated."""
    verts, faces = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = []
            for tok in parts[1:]:
                i = int(tok.split("/")[0])
                idx.append(i - 1 if i > 0 else len(verts) + i)
            faces += [[idx[0], idx[j], idx[j + 1]] for j in range(1, len(idx) - 1)]
    return Mesh(np.array(verts, dtype=np.float64).reshape(-1, 3),
                np.array(faces, dtype=np.int64).reshape(-1, 3))


def write_obj(mesh: Mesh) -> str:
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    return "\n".join(lines) + "\n"


def read_off(text: str) -> Mesh:
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens += line.split()
    if not tokens or not tokens[0].endswith("OFF"):
        raise MeshError("not an OFF file")
    head = tokens[0][:-3]
    rest = ([head] if head else []) + tokens[1:]
    nv, nf = int(rest[0]), int(rest[1])
    pos = 3
    verts = np.array(rest[pos:pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
    pos += 3 * nv
    faces = []
    for _ in range(nf):
        k = int(rest[pos])
        idx = [int(t) for t in rest[pos + 1:pos + 1 + k]]
        pos += 1 + k
        faces += [[idx[0], idx[j], idx[j + 1]] for j in range(1, k - 1)]
    return Mesh(verts, np.array(faces, dtype=np.int64).reshape(-1, 3))


def write_off(mesh: Mesh) -> str:
    lines = ["OFF", f"{len(mesh.vertices)} {len(mesh.faces)} 0"]
    lines += [f"{x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
    return "\n".join(lines) + "\n"


def load_mesh(path) -> Mesh:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".off":
        return read_off(text)
    return read_obj(text)


def save_mesh(path, mesh: Mesh) -> Path:
    path = Path(path)
    path.write_text(write_off(mesh) if path.suffix.lower() == ".off" else write_obj(mesh))
    return path


def icosphere(subdivisions: int = 4, radius: float = 0.5) -> Mesh:
    """Geodesic sphere; ``10 * 4**s + 2`` vertices (2562 for ``s = 4``)."""
    t = (1 + 5 ** 0.5) / 2
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    v = [np.array(p, dtype=np.float64) / np.linalg.norm(p) for p in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = v[a] + v[b]
                v.append(m / np.linalg.norm(m))
                cache[key] = len(v) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return Mesh(radius * np.array(v), np.array(faces))


def normalize(mesh: Mesh) -> Mesh:
    """Centre the bounding box at the origin and scale its longest side to 1.

    The result fits in ``[-0.5, 0.5]^3``. Already-normalized meshes are
    returned unchanged, so the operation is idempotent.
    """
    v = mesh.vertices
    if len(v) == 0:
        raise MeshError("empty mesh")
    lo, hi = v.min(axis=0), v.max(axis=0)
    extent = float((hi - lo).max())
    if extent == 0:
        raise MeshError("mesh has zero extent")
    centre = (lo + hi) / 2
    if np.all(np.abs(centre) <= 1e-12) and abs(extent - 1.0) <= 1e-12:
        return mesh
    return Mesh((v - centre) / extent, mesh.faces)


def is_watertight(mesh: Mesh) -> bool:
    """Every undirected edge is shared by exactly two faces."""
    if len(mesh.faces) == 0:
        return False
    f = mesh.faces
    edges = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    return bool(np.all(counts == 2))


def sample_surface(mesh: Mesh, n: int, g: np.random.Generator) -> np.ndarray:
    """``n`` points uniformly distributed over the surface area."""
    areas = mesh.areas()
    total = areas.sum()
    if not total > 0:
        raise MeshError("mesh has no surface area")
    cdf = np.cumsum(areas) / total
    idx = np.minimum(np.searchsorted(cdf, g.random(n), side="right"), len(areas) - 1)
    r1, r2 = g.random(n), g.random(n)
    s = np.sqrt(r1)
    w = np.stack([1 - s, s * (1 - r2), s * r2], axis=1)
    return np.einsum("nk,nkd->nd", w, mesh.triangles[idx])
