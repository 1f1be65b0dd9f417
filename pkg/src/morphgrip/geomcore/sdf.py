"""Signed distance fields: analytic primitives and sampled grids.

Sign convention: negative inside the solid, positive outside. Analytic
kinds evaluate the exact Euclidean distance; grid kind interpolates
trilinearly inside its domain and falls back to nearest-boundary value
plus the Euclidean offset outside.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DegenerateGradientError, InvalidSdfError
from .mesh import TriMesh, require_watertight

GRID_GRADIENT_STEP = 1e-5  # m, central differences for non-analytic gradients
_SDF_MAGIC = b"SDF1"


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Local coordinates to world."""
        return np.asarray(points) @ self.rotation.T + self.translation

    def invert(self, points: np.ndarray) -> np.ndarray:
        """World coordinates to local."""
        return (np.asarray(points) - self.translation) @ self.rotation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self ∘ other: apply `other` first, then `self`."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)


class Sdf:
    """Base class; subclasses implement local-frame distance queries."""

    kind = "abstract"

    def __init__(self, pose: RigidTransform | None = None):
        self.pose = pose if pose is not None else RigidTransform.identity()

    def local_distance(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def local_gradient(self, pts: np.ndarray) -> np.ndarray | None:
        """Raw (unnormalized) local gradient, or None to use central differences."""
        return None

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = self.local_distance(self.pose.invert(pts))
        return out if np.asarray(points).ndim > 1 else out[0]

    def gradient(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        local = self.pose.invert(pts)
        raw = self.local_gradient(local)
        if raw is None:
            raw = _central_difference_gradient(self.local_distance, local)
        norms = np.linalg.norm(raw, axis=1)
        if np.any(norms < 1e-12):
            raise DegenerateGradientError("zero-magnitude SDF gradient")
        unit_local = raw / norms[:, None]
        world = unit_local @ self.pose.rotation.T
        return world if np.asarray(points).ndim > 1 else world[0]


def _central_difference_gradient(f, pts: np.ndarray, h: float = GRID_GRADIENT_STEP) -> np.ndarray:
    g = np.empty_like(pts)
    for axis in range(3):
        d = np.zeros(3)
        d[axis] = h
        g[:, axis] = (f(pts + d) - f(pts - d)) / (2.0 * h)
    return g


class BoxSdf(Sdf):
    kind = "analytic-box"

    def __init__(self, half_extents, pose: RigidTransform | None = None):
        super().__init__(pose)
        self.half_extents = np.asarray(half_extents, dtype=np.float64).reshape(3)

    def local_distance(self, pts: np.ndarray) -> np.ndarray:
        q = np.abs(pts) - self.half_extents
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(q.max(axis=1), 0.0)
        return outside + inside

    def local_gradient(self, pts: np.ndarray) -> np.ndarray:
        q = np.abs(pts) - self.half_extents
        qpos = np.maximum(q, 0.0)
        outside = np.linalg.norm(qpos, axis=1)
        g = np.where(outside[:, None] > 0.0, qpos * np.sign(pts), 0.0)
        # inside (or exactly on a face): push along the least-deep axis
        interior = outside <= 0.0
        if np.any(interior):
            axis = q[interior].argmax(axis=1)
            rows = np.nonzero(interior)[0]
            g[rows, axis] = np.where(np.sign(pts[rows, axis]) != 0.0, np.sign(pts[rows, axis]), 1.0)
        return g


class SphereSdf(Sdf):
    kind = "analytic-sphere"

    def __init__(self, radius: float, pose: RigidTransform | None = None):
        super().__init__(pose)
        self.radius = float(radius)

    def local_distance(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts, axis=1) - self.radius

    def local_gradient(self, pts: np.ndarray) -> np.ndarray:
        return pts.copy()


class CylinderSdf(Sdf):
    """Axis along local z, centered at the origin."""

    kind = "analytic-cylinder"

    def __init__(self, radius: float, height: float, pose: RigidTransform | None = None):
        super().__init__(pose)
        self.radius = float(radius)
        self.height = float(height)

    def local_distance(self, pts: np.ndarray) -> np.ndarray:
        rho = np.hypot(pts[:, 0], pts[:, 1])
        d = np.stack([rho - self.radius, np.abs(pts[:, 2]) - 0.5 * self.height], axis=1)
        outside = np.linalg.norm(np.maximum(d, 0.0), axis=1)
        inside = np.minimum(d.max(axis=1), 0.0)
        return outside + inside

    def local_gradient(self, pts: np.ndarray) -> np.ndarray:
        rho = np.hypot(pts[:, 0], pts[:, 1])
        dr = rho - self.radius
        dz = np.abs(pts[:, 2]) - 0.5 * self.height
        with np.errstate(invalid="ignore", divide="ignore"):
            radial = np.where(rho[:, None] > 1e-12, pts[:, :2] / np.maximum(rho, 1e-300)[:, None], 0.0)
        g = np.zeros_like(pts)
        inside = (dr <= 0.0) & (dz <= 0.0)
        out = ~inside
        g[out, 0] = np.maximum(dr[out], 0.0) * radial[out, 0]
        g[out, 1] = np.maximum(dr[out], 0.0) * radial[out, 1]
        g[out, 2] = np.maximum(dz[out], 0.0) * np.sign(pts[out, 2])
        lateral = inside & (dr >= dz)
        g[lateral, :2] = radial[lateral]
        caps = inside & (dr < dz)
        g[caps, 2] = np.where(np.sign(pts[caps, 2]) != 0.0, np.sign(pts[caps, 2]), 1.0)
        return g


class HalfSpaceSdf(Sdf):
    """Solid fills local z <= 0; distance is the local z coordinate."""

    kind = "analytic-half-space"

    def local_distance(self, pts: np.ndarray) -> np.ndarray:
        return pts[:, 2].copy()

    def local_gradient(self, pts: np.ndarray) -> np.ndarray:
        g = np.zeros_like(pts)
        g[:, 2] = 1.0
        return g


class TriPrismSdf(Sdf):
    """Triangular prism: cross-section triangle in the local (x, z) plane
    (base on z = 0, apex up), extruded along y over [-half_length, +half_length].
    """

    kind = "analytic-triangular-prism"

    def __init__(self, base_width: float, apex_height: float, half_length: float,
                 pose: RigidTransform | None = None):
        super().__init__(pose)
        self.base_width = float(base_width)
        self.apex_height = float(apex_height)
        self.half_length = float(half_length)

    def _triangle(self) -> np.ndarray:
        b, h = self.base_width, self.apex_height
        return np.array([[-0.5 * b, 0.0], [0.5 * b, 0.0], [0.0, h]])

    def local_distance(self, pts: np.ndarray) -> np.ndarray:
        d2 = _triangle_sdf_2d(pts[:, [0, 2]], self._triangle())
        dy = np.abs(pts[:, 1]) - self.half_length
        w = np.stack([d2, dy], axis=1)
        return np.minimum(w.max(axis=1), 0.0) + np.linalg.norm(np.maximum(w, 0.0), axis=1)


def _triangle_sdf_2d(p: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Exact signed distance from 2D points to a triangle (negative inside)."""
    p0, p1, p2 = tri[0], tri[1], tri[2]
    e0, e1, e2 = p1 - p0, p2 - p1, p0 - p2
    v0, v1, v2 = p - p0, p - p1, p - p2

    def seg_dist_sq(v, e):
        t = np.clip((v @ e) / (e @ e), 0.0, 1.0)
        pq = v - t[:, None] * e[None, :]
        return np.einsum("ij,ij->i", pq, pq)

    d0, d1, d2 = seg_dist_sq(v0, e0), seg_dist_sq(v1, e1), seg_dist_sq(v2, e2)
    s = np.sign(e0[0] * e2[1] - e0[1] * e2[0])
    c0 = s * (v0[:, 0] * e0[1] - v0[:, 1] * e0[0])
    c1 = s * (v1[:, 0] * e1[1] - v1[:, 1] * e1[0])
    c2 = s * (v2[:, 0] * e2[1] - v2[:, 1] * e2[0])
    dist = np.sqrt(np.minimum(np.minimum(d0, d1), d2))
    inside = (c0 <= 0) & (c1 <= 0) & (c2 <= 0)
    return np.where(inside, -dist, dist)


class GridSdf(Sdf):
    kind = "grid"

    def __init__(self, origin, cell_size: float, values: np.ndarray,
                 pose: RigidTransform | None = None):
        super().__init__(pose)
        self.origin = np.asarray(origin, dtype=np.float64).reshape(3)
        self.cell_size = float(cell_size)
        self.values = np.ascontiguousarray(values, dtype=np.float64)

    @property
    def resolution(self) -> tuple[int, int, int]:
        return self.values.shape  # type: ignore[return-value]

    def local_distance(self, pts: np.ndarray) -> np.ndarray:
        res = np.array(self.values.shape)
        if self.values.ndim != 3 or np.any(res < 2) or self.cell_size <= 0.0:
            raise InvalidSdfError(f"grid SDF needs >= 2 samples per axis, got {self.values.shape}")
        u = (pts - self.origin) / self.cell_size
        uc = np.clip(u, 0.0, res - 1.000001)
        i = np.minimum(uc.astype(np.int64), res - 2)
        f = uc - i
        v = self.values
        i0, j0, k0 = i[:, 0], i[:, 1], i[:, 2]
        fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
        c00 = v[i0, j0, k0] * (1 - fx) + v[i0 + 1, j0, k0] * fx
        c10 = v[i0, j0 + 1, k0] * (1 - fx) + v[i0 + 1, j0 + 1, k0] * fx
        c01 = v[i0, j0, k0 + 1] * (1 - fx) + v[i0 + 1, j0, k0 + 1] * fx
        c11 = v[i0, j0 + 1, k0 + 1] * (1 - fx) + v[i0 + 1, j0 + 1, k0 + 1] * fx
        c0 = c00 * (1 - fy) + c10 * fy
        c1 = c01 * (1 - fy) + c11 * fy
        interp = c0 * (1 - fz) + c1 * fz
        # outside the sampled domain: value at the clamped point plus the offset
        offset = np.linalg.norm((u - uc) * self.cell_size, axis=1)
        return interp + offset


def sdf_eval(sdf: Sdf, x) -> float | np.ndarray:
    """Signed distance at one point (or an (n, 3) batch)."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("query point must be finite")
    result = sdf.evaluate(x)
    return float(result) if x.ndim == 1 else result


def sdf_gradient(sdf: Sdf, x) -> np.ndarray:
    """Unit outward gradient at one point (or an (n, 3) batch)."""
    return sdf.gradient(np.asarray(x, dtype=np.float64))


def _surface_lattice(mesh: TriMesh, spacing: float) -> np.ndarray:
    """Deterministic dense point coverage of the mesh surface.

    Each face gets a barycentric lattice fine enough that no surface point
    is farther than `spacing` from a lattice point.
    """
    a, b, c = mesh.face_corners()
    edge = np.maximum(np.linalg.norm(b - a, axis=1),
                      np.maximum(np.linalg.norm(c - b, axis=1), np.linalg.norm(a - c, axis=1)))
    levels = np.maximum(1, np.ceil(edge / spacing).astype(int))
    chunks = [mesh.vertices]
    for n in np.unique(levels):
        sel = levels == n
        ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        keep = (ii + jj) <= n
        u = (ii[keep] / n)[None, :, None]
        v = (jj[keep] / n)[None, :, None]
        pts = (1.0 - u - v) * a[sel][:, None, :] + u * b[sel][:, None, :] + v * c[sel][:, None, :]
        chunks.append(pts.reshape(-1, 3))
    return np.concatenate(chunks, axis=0)


def _parity_inside(mesh: TriMesh, origin: np.ndarray, cell: float,
                   res: tuple[int, int, int]) -> np.ndarray:
    """Inside mask on the grid by axis-aligned ray parity, 3-axis majority vote."""
    votes = np.zeros(res, dtype=np.int8)
    verts, faces = mesh.vertices, mesh.faces
    for axis in range(3):
        b_axis, c_axis = [a for a in range(3) if a != axis]
        nb, nc, na = res[b_axis], res[c_axis], res[axis]
        # rays offset slightly off the node columns to dodge edge/vertex hits
        eps_b = cell * 4.14159e-4
        eps_c = cell * 2.71828e-4
        coords_b = origin[b_axis] + cell * np.arange(nb) + eps_b
        coords_c = origin[c_axis] + cell * np.arange(nc) + eps_c
        crossings_col: list[np.ndarray] = []
        crossings_t: list[np.ndarray] = []
        tri = verts[faces]  # (F, 3, 3)
        pb, pc, pa = tri[:, :, b_axis], tri[:, :, c_axis], tri[:, :, axis]
        for fi in range(len(faces)):
            b0, b1, b2 = pb[fi]
            c0, c1, c2 = pc[fi]
            lob, hib = min(b0, b1, b2), max(b0, b1, b2)
            loc, hic = min(c0, c1, c2), max(c0, c1, c2)
            ib0 = max(0, int(np.ceil((lob - eps_b - origin[b_axis]) / cell)))
            ib1 = min(nb - 1, int(np.floor((hib - eps_b - origin[b_axis]) / cell)))
            ic0 = max(0, int(np.ceil((loc - eps_c - origin[c_axis]) / cell)))
            ic1 = min(nc - 1, int(np.floor((hic - eps_c - origin[c_axis]) / cell)))
            if ib1 < ib0 or ic1 < ic0:
                continue
            gb = coords_b[ib0:ib1 + 1][:, None]
            gc = coords_c[ic0:ic1 + 1][None, :]
            det = (b1 - b0) * (c2 - c0) - (b2 - b0) * (c1 - c0)
            if abs(det) < 1e-30:
                continue  # ray parallel to the face plane
            w1 = ((gb - b0) * (c2 - c0) - (gc - c0) * (b2 - b0)) / det
            w2 = ((gc - c0) * (b1 - b0) - (gb - b0) * (c1 - c0)) / det
            hit = (w1 >= 0.0) & (w2 >= 0.0) & (w1 + w2 <= 1.0)
            if not hit.any():
                continue
            t = pa[fi, 0] + w1 * (pa[fi, 1] - pa[fi, 0]) + w2 * (pa[fi, 2] - pa[fi, 0])
            jb, jc = np.nonzero(hit)
            crossings_col.append((jb + ib0) * nc + (jc + ic0))
            crossings_t.append(t[hit])
        node_a = origin[axis] + cell * np.arange(na)
        inside_axis = np.zeros((nb, nc, na), dtype=bool)
        if crossings_col:
            cols = np.concatenate(crossings_col)
            ts = np.concatenate(crossings_t)
            order = np.lexsort((ts, cols))
            cols, ts = cols[order], ts[order]
            starts = np.searchsorted(cols, np.arange(nb * nc), side="left")
            ends = np.searchsorted(cols, np.arange(nb * nc), side="right")
            for col in np.unique(cols):
                seg = ts[starts[col]:ends[col]]
                above = len(seg) - np.searchsorted(seg, node_a, side="right")
                inside_axis[col // nc, col % nc, :] = (above % 2) == 1
        # back to (x, y, z) order
        perm = np.argsort([b_axis, c_axis, axis])
        votes += np.transpose(inside_axis, perm).astype(np.int8)
    return votes >= 2


def mesh_to_sdf_grid(mesh: TriMesh, resolution, padding: float) -> GridSdf:
    """Sample the signed distance of a watertight mesh on a regular grid.

    Node values are accurate to well under one cell diagonal: unsigned
    distance comes from a dense deterministic surface lattice, the sign
    from 3-axis ray-parity voting.
    """
    if np.isscalar(resolution):
        resolution = (int(resolution),) * 3
    res = tuple(int(r) for r in resolution)
    if min(res) < 8:
        raise ValueError(f"resolution must be >= 8 per axis, got {res}")
    require_watertight(mesh)
    lo, hi = mesh.bbox()
    lo = lo - padding
    hi = hi + padding
    cell = float(np.max((hi - lo) / (np.array(res) - 1)))
    center = 0.5 * (lo + hi)
    origin = center - cell * (np.array(res) - 1) / 2.0

    surface = _surface_lattice(mesh, spacing=cell / 4.0)
    tree = cKDTree(surface)
    ax = [origin[a] + cell * np.arange(res[a]) for a in range(3)]
    nodes = np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1).reshape(-1, 3)
    dist, _ = tree.query(nodes, k=1)
    dist = dist.reshape(res)

    inside = _parity_inside(mesh, origin, cell, res)
    values = np.where(inside, -dist, dist)
    return GridSdf(origin, cell, values)


def save_grid_sdf(sdf: GridSdf, path: str) -> None:
    """Binary layout: magic "SDF1", 3 u32 resolution, 3 f64 origin, f64 cell
    size, then f32 values in x-fastest order; little-endian throughout.
    """
    res = sdf.values.shape
    with open(path, "wb") as fh:
        fh.write(_SDF_MAGIC)
        fh.write(struct.pack("<3I", *res))
        fh.write(struct.pack("<3d", *sdf.origin))
        fh.write(struct.pack("<d", sdf.cell_size))
        # x-fastest: index order (z, y, x) in memory
        fh.write(np.ascontiguousarray(sdf.values.transpose(2, 1, 0), dtype="<f4").tobytes())


def load_grid_sdf(path: str) -> GridSdf:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SDF_MAGIC:
            raise InvalidSdfError(f"{path}: bad magic {magic!r}")
        res = struct.unpack("<3I", fh.read(12))
        origin = struct.unpack("<3d", fh.read(24))
        (cell,) = struct.unpack("<d", fh.read(8))
        count = res[0] * res[1] * res[2]
        raw = np.frombuffer(fh.read(4 * count), dtype="<f4")
        if raw.size != count:
            raise InvalidSdfError(f"{path}: truncated value block")
    values = raw.reshape(res[2], res[1], res[0]).transpose(2, 1, 0).astype(np.float64)
    return GridSdf(np.array(origin), cell, values)
