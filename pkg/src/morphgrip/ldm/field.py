"""Gaussian RBF velocity fields and their unit-time flows.

A design's geometry is the image of a base finger mesh under the flow of a
stationary velocity field built from K Gaussian kernels. A smooth vertical
freeze mask pins the mount region so deformed fingers stay attachable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FlowDivergenceError
from ..geomcore.mesh import TriMesh

SIGMA_MIN = 0.005  # m, hard lower bound on kernel widths
DEFAULT_FLOW_STEPS = 16
FREEZE_BAND = 0.01  # m, width of the partial-freeze band below the mount


@dataclass(frozen=True)
class RbfField:
    centers: np.ndarray  # (K, 3) m
    widths: np.ndarray  # (K,) m, all positive
    weights: np.ndarray  # (K, 3) m/s

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=np.float64).reshape(-1, 3)
        w = np.asarray(self.widths, dtype=np.float64).reshape(-1)
        lam = np.asarray(self.weights, dtype=np.float64).reshape(-1, 3)
        if not (len(c) == len(w) == len(lam)):
            raise ValueError("centers, widths, weights must agree on kernel count")
        if np.any(w <= 0.0):
            raise ValueError("kernel widths must be positive")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(w)) and np.all(np.isfinite(lam))):
            raise ValueError("field parameters must be finite")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "weights", lam)

    @property
    def kernel_count(self) -> int:
        return len(self.widths)


@dataclass(frozen=True)
class FreezeMask:
    """1 below z_lo (free), 0 above z_hi (frozen), quintic smoothstep between."""

    z_lo: float
    z_hi: float

    def __post_init__(self):
        if not self.z_lo < self.z_hi:
            raise ValueError("freeze mask needs z_lo < z_hi")

    def value(self, z: np.ndarray) -> np.ndarray:
        t = np.clip((np.asarray(z) - self.z_lo) / (self.z_hi - self.z_lo), 0.0, 1.0)
        return 1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)

    def derivative(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z)
        t = (z - self.z_lo) / (self.z_hi - self.z_lo)
        inside = (t > 0.0) & (t < 1.0)
        tc = np.where(inside, t, 0.0)
        d = -30.0 * tc * tc * (tc - 1.0) * (tc - 1.0) / (self.z_hi - self.z_lo)
        return np.where(inside, d, 0.0)


def rbf_kernels(field: RbfField, pts: np.ndarray) -> np.ndarray:
    """Gaussian kernel values, shape (n, K)."""
    diff = pts[:, None, :] - field.centers[None, :, :]
    r2 = np.einsum("nkj,nkj->nk", diff, diff)
    return np.exp(-r2 / (2.0 * field.widths**2))


def rbf_velocity(field: RbfField, mask: FreezeMask, x: np.ndarray) -> np.ndarray:
    """Masked field velocity at x; exactly zero at and above the mount plane."""
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    phi = rbf_kernels(field, pts)
    v = mask.value(pts[:, 2])[:, None] * (phi @ field.weights)
    return v if np.asarray(x).ndim > 1 else v[0]


def integrate_flow(field: RbfField, mask: FreezeMask, points: np.ndarray,
                   steps: int = DEFAULT_FLOW_STEPS) -> np.ndarray:
    """Transport points along the masked field from t=0 to t=1 with RK4."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.atleast_2d(np.asarray(points, dtype=np.float64)).copy()
    h = 1.0 / steps

    def vel(p: np.ndarray) -> np.ndarray:
        return rbf_velocity(field, mask, p)

    for _ in range(steps):
        k1 = vel(x)
        k2 = vel(x + 0.5 * h * k1)
        k3 = vel(x + 0.5 * h * k2)
        k4 = vel(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        bad = ~np.all(np.isfinite(x), axis=1)
        if bad.any():
            raise FlowDivergenceError(int(np.nonzero(bad)[0][0]))
    return x if np.asarray(points).ndim > 1 else x[0]


def softplus(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def softplus_inverse(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    return y + np.log(-np.expm1(-y))


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def unpack_params(raw: np.ndarray, centers: np.ndarray,
                  sigma_min: float = SIGMA_MIN) -> RbfField:
    """Raw 4K vector -> field. Layout per kernel: weight xyz, then an
    unconstrained width mapped through softplus(.) + sigma_min.
    """
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    k = len(centers)
    raw = np.asarray(raw, dtype=np.float64).reshape(k, 4)
    return RbfField(centers=centers, widths=softplus(raw[:, 3]) + sigma_min,
                    weights=raw[:, :3])


def pack_params(field: RbfField, sigma_min: float = SIGMA_MIN) -> np.ndarray:
    raw = np.empty((field.kernel_count, 4))
    raw[:, :3] = field.weights
    raw[:, 3] = softplus_inverse(field.widths - sigma_min)
    return raw.reshape(-1)


def default_mask(base: TriMesh, band: float = FREEZE_BAND) -> FreezeMask:
    """Mount plane at the top of the base mesh; freeze band just below it."""
    z_hi = float(base.vertices[:, 2].max())
    return FreezeMask(z_lo=z_hi - band, z_hi=z_hi)


def default_centers(base: TriMesh, mask: FreezeMask,
                    grid: tuple[int, int, int] = (3, 3, 2)) -> np.ndarray:
    """Kernel centers on a lattice spanning the deformable (below-mount) region."""
    lo, hi = base.bbox()
    xs = np.linspace(lo[0], hi[0], grid[0])
    ys = np.linspace(lo[1], hi[1], grid[1])
    zs = np.linspace(lo[2], mask.z_lo, grid[2])
    pts = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)
    return pts


def raw_dimension(kernel_count: int) -> int:
    return 4 * kernel_count


def deform_mesh(raw_params: np.ndarray, base: TriMesh, mask: FreezeMask,
                steps: int = DEFAULT_FLOW_STEPS, centers: np.ndarray | None = None,
                sigma_min: float = SIGMA_MIN) -> TriMesh:
    """Transport the base mesh vertices; topology is untouched."""
    if centers is None:
        centers = default_centers(base, mask)
    field = unpack_params(raw_params, centers, sigma_min)
    moved = integrate_flow(field, mask, base.vertices, steps)
    # the masked field vanishes identically at and above the mount plane;
    # restore those vertices outright so they are bit-identical (a +0.0 sum
    # would flip the sign bit of a -0.0 coordinate)
    frozen = base.vertices[:, 2] >= mask.z_hi
    moved[frozen] = base.vertices[frozen]
    return base.with_vertices(moved)
