"""Triangle meshes: construction, IO, sampling, and basic measures.

Vertices are in meters. The text format is one "v x y z" line per vertex
followed by one "f i j k" line per face with one-based vertex indices.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyMeshError, OpenMeshError

DEGENERATE_AREA = 1e-12  # m^2


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray  # (n, 3) float64
    faces: np.ndarray  # (m, 3) int64

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (m, 3), got {f.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices contain non-finite coordinates")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        if f.size and np.any(self.face_areas() < DEGENERATE_AREA):
            bad = int(np.sum(self.face_areas() < DEGENERATE_AREA))
            raise ValueError(f"{bad} degenerate faces (area < {DEGENERATE_AREA} m^2)")

    def face_corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        v, f = self.vertices, self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    def face_areas(self) -> np.ndarray:
        a, b, c = self.face_corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def face_normals(self) -> np.ndarray:
        a, b, c = self.face_corners()
        n = np.cross(b - a, c - a)
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def with_vertices(self, vertices: np.ndarray) -> "TriMesh":
        """Same topology, new vertex positions."""
        return TriMesh(vertices, self.faces.copy())

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "TriMesh":
        v = self.vertices @ np.asarray(rotation, dtype=np.float64).T + np.asarray(translation, dtype=np.float64)
        return TriMesh(v, self.faces.copy())

    def mirrored_x(self) -> "TriMesh":
        """Reflect across the x = 0 plane, flipping faces to keep orientation."""
        v = self.vertices.copy()
        v[:, 0] = -v[:, 0]
        f = self.faces[:, [0, 2, 1]].copy()
        return TriMesh(v, f)


def mesh_volume(mesh: TriMesh) -> float:
    """Signed volume via the divergence theorem; positive for outward-oriented closed meshes."""
    a, b, c = mesh.face_corners()
    return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c))) / 6.0)


def open_edge_count(mesh: TriMesh) -> int:
    """Number of undirected edges not shared by exactly two faces."""
    f = mesh.faces
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    return int(np.sum(counts != 2))


def require_watertight(mesh: TriMesh) -> None:
    bad = open_edge_count(mesh)
    if bad:
        raise OpenMeshError(bad)


def surface_sample(mesh: TriMesh, n: int, seed: int) -> np.ndarray:
    """Sample n points area-weighted uniformly on the mesh surface.

    Deterministic for a given seed; returns an (n, 3) array.
    """
    if mesh.faces.shape[0] == 0:
        raise EmptyMeshError("cannot sample an empty mesh")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    areas = mesh.face_areas()
    probs = areas / areas.sum()
    idx = rng.choice(len(probs), size=n, p=probs)
    a, b, c = mesh.face_corners()
    # uniform barycentric coordinates via square-root trick
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    u = 1.0 - r1
    v = r1 * (1.0 - r2)
    w = r1 * r2
    return (u[:, None] * a[idx] + v[:, None] * b[idx] + w[:, None] * c[idx])


def save_mesh(mesh: TriMesh, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_mesh(mesh, fh)


def write_mesh(mesh: TriMesh, fh: io.TextIOBase) -> None:
    for x, y, z in mesh.vertices:
        fh.write(f"v {x:.9g} {y:.9g} {z:.9g}\n")
    for i, j, k in mesh.faces + 1:
        fh.write(f"f {i} {j} {k}\n")


def load_mesh(path: str) -> TriMesh:
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ValueError(f"{path}:{line_no}: malformed vertex line")
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                if len(parts) < 4:
                    raise ValueError(f"{path}:{line_no}: malformed face line")
                # tolerate obj-style "i/j/k" references, keep the vertex index
                faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    if not verts:
        raise EmptyMeshError(f"{path}: no vertices")
    return TriMesh(np.array(verts), np.array(faces, dtype=np.int64))


def box_mesh(half_extents, center=(0.0, 0.0, 0.0), subdivisions=(1, 1, 1)) -> TriMesh:
    """Axis-aligned box surface, each face subdivided into a quad grid.

    Outward-oriented; watertight for any subdivision counts.
    """
    hx, hy, hz = float(half_extents[0]), float(half_extents[1]), float(half_extents[2])
    nx, ny, nz = (max(1, int(s)) for s in subdivisions)
    xs = np.linspace(-hx, hx, nx + 1)
    ys = np.linspace(-hy, hy, ny + 1)
    zs = np.linspace(-hz, hz, nz + 1)

    vert_map: dict[tuple[int, int, int], int] = {}
    verts: list[tuple[float, float, float]] = []

    def vid(i: int, j: int, k: int) -> int:
        key = (i, j, k)
        if key not in vert_map:
            vert_map[key] = len(verts)
            verts.append((xs[i], ys[j], zs[k]))
        return vert_map[key]

    faces: list[tuple[int, int, int]] = []

    def add_quad(v00: int, v10: int, v11: int, v01: int) -> None:
        faces.append((v00, v10, v11))
        faces.append((v00, v11, v01))

    for j in range(ny):  # x = -hx (normal -x) and x = +hx (normal +x)
        for k in range(nz):
            add_quad(vid(0, j, k), vid(0, j, k + 1), vid(0, j + 1, k + 1), vid(0, j + 1, k))
            add_quad(vid(nx, j, k), vid(nx, j + 1, k), vid(nx, j + 1, k + 1), vid(nx, j, k + 1))
    for i in range(nx):  # y = -hy and y = +hy
        for k in range(nz):
            add_quad(vid(i, 0, k), vid(i + 1, 0, k), vid(i + 1, 0, k + 1), vid(i, 0, k + 1))
            add_quad(vid(i, ny, k), vid(i, ny, k + 1), vid(i + 1, ny, k + 1), vid(i + 1, ny, k))
    for i in range(nx):  # z = -hz and z = +hz
        for j in range(ny):
            add_quad(vid(i, j, 0), vid(i, j + 1, 0), vid(i + 1, j + 1, 0), vid(i + 1, j, 0))
            add_quad(vid(i, j, nz), vid(i + 1, j, nz), vid(i + 1, j + 1, nz), vid(i, j + 1, nz))

    v = np.array(verts) + np.asarray(center, dtype=np.float64)
    return TriMesh(v, np.array(faces, dtype=np.int64))


def icosphere_mesh(radius: float, center=(0.0, 0.0, 0.0), refinements: int = 3) -> TriMesh:
    """Icosahedron subdivided `refinements` times and projected to the sphere."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    for _ in range(refinements):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = np.array(verts[i]) + np.array(verts[j])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(tuple(m))
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.array(verts) * float(radius) + np.asarray(center, dtype=np.float64)
    return TriMesh(v, np.array(faces, dtype=np.int64))
