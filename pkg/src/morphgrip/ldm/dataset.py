"""Target-shape corpus and dataset augmentation for latent space training.

Target fingers are procedural warps of the base slab: superellipsoid bulge
profiles, tapered wedges, hooks, and paddles, all pinned at the mount so
every target remains attachable. Augmentation follows the mount constraint
too: rotation about the vertical axis, small horizontal translation, and
isotropic scaling about the mount center, blended to identity at the mount.
"""
from __future__ import annotations

import logging

import numpy as np

from ..errors import FitFailureError
from ..geomcore.mesh import TriMesh, surface_sample
from ..rng import STREAM_DATASET, substream
from .field import DEFAULT_FLOW_STEPS, FreezeMask, default_centers, deform_mesh
from .fitting import FitResult, fit_deformation

logger = logging.getLogger(__name__)

TARGET_FAMILIES = ("superellipsoid", "wedge", "hook", "paddle")

ROTATION_RANGE = np.deg2rad(30.0)  # about the vertical axis
TRANSLATION_RANGE = 0.01  # m per horizontal axis
SCALE_RANGE = (0.8, 1.25)
MAX_REDRAWS = 5


def _depth(z: np.ndarray, mask: FreezeMask, tip_z: float) -> np.ndarray:
    """0 at the free boundary z_lo, 1 at the fingertip."""
    return np.clip((mask.z_lo - z) / max(mask.z_lo - tip_z, 1e-9), 0.0, 1.0)


def procedural_target(kind: str, base: TriMesh, mask: FreezeMask,
                      rng: np.random.Generator) -> TriMesh:
    """One random target mesh of the requested family, mount region intact."""
    v = base.vertices.copy()
    tip_z = float(v[:, 2].min())
    d = _depth(v[:, 2], mask, tip_z)
    blend = mask.value(v[:, 2])  # 1 below the freeze band, 0 at the mount
    x, y = v[:, 0], v[:, 1]
    new_x, new_y = x.copy(), y.copy()
    if kind == "superellipsoid":
        # superellipse bulge profile along depth
        p = rng.uniform(1.5, 4.0)
        amp = rng.uniform(0.3, 1.4)
        profile = (1.0 - np.abs(2.0 * d - 1.0) ** p) ** (1.0 / p)
        s = 1.0 + amp * profile
        new_x, new_y = x * s, y * s
    elif kind == "wedge":
        tx = rng.uniform(0.25, 2.2)
        ty = rng.uniform(0.4, 1.6)
        new_x = x * (1.0 + (tx - 1.0) * d)
        new_y = y * (1.0 + (ty - 1.0) * d)
    elif kind == "hook":
        amp = rng.uniform(-0.02, 0.02)
        new_x = x + amp * d**2
    elif kind == "paddle":
        widen = rng.uniform(1.3, 2.5)
        thin = rng.uniform(0.35, 0.8)
        new_x = x * (1.0 + (thin - 1.0) * d)
        new_y = y * (1.0 + (widen - 1.0) * d)
    else:
        raise ValueError(f"unknown target family {kind!r}")
    out = v.copy()
    out[:, 0] = x + blend * (new_x - x)
    out[:, 1] = y + blend * (new_y - y)
    # optional mild elongation, kept inside the stable flow regime
    stretch = rng.uniform(0.85, 1.15)
    out[:, 2] = v[:, 2] + blend * (mask.z_lo + (v[:, 2] - mask.z_lo) * stretch - v[:, 2])
    return base.with_vertices(out)


def generate_target_corpus(base: TriMesh, mask: FreezeMask, count: int,
                           seed: int) -> list[TriMesh]:
    """Deterministic list of procedural targets cycling through the families."""
    rng = substream(seed, STREAM_DATASET, 0)
    return [procedural_target(TARGET_FAMILIES[i % len(TARGET_FAMILIES)], base, mask, rng)
            for i in range(count)]


def fit_target_corpus(targets: list[TriMesh], base: TriMesh, mask: FreezeMask,
                      budget: int, seed: int, n_samples: int = 2048,
                      steps: int = DEFAULT_FLOW_STEPS) -> list[FitResult]:
    """Fit deformation parameters for each target mesh."""
    results = []
    for i, tgt in enumerate(targets):
        cloud = surface_sample(tgt, n_samples, seed=seed + 7919 * i)
        results.append(fit_deformation(cloud, base, mask, budget=budget,
                                       seed=seed + i, steps=steps,
                                       n_samples=n_samples))
    return results


def _mount_transform(points: np.ndarray, mask: FreezeMask, angle: float,
                     shift: np.ndarray, scale: float) -> np.ndarray:
    """Rigid+scale transform about the mount center, blended to identity there."""
    pivot = np.array([0.0, 0.0, mask.z_hi])
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    moved = (points - pivot) @ rot.T * scale + pivot
    moved[:, 0] += shift[0]
    moved[:, 1] += shift[1]
    blend = mask.value(points[:, 2])[:, None]
    return points + blend * (moved - points)


def augment_dataset(shapes: list[np.ndarray], n_total: int, seed: int,
                    base: TriMesh, mask: FreezeMask, fit_budget: int = 800,
                    n_samples: int = 2048, steps: int = DEFAULT_FLOW_STEPS
                    ) -> list[np.ndarray]:
    """Grow a raw-parameter dataset to n_total by transform-and-refit.

    The first len(shapes) outputs are the inputs unchanged. Each new entry
    decodes a source shape, applies a random mount-preserving transform to
    its surface, and refits deformation parameters (warm-started from the
    source). Deterministic per seed; failed fits are redrawn a few times
    and finally skipped with a warning.
    """
    if not shapes:
        raise ValueError("need at least one source shape")
    if n_total < len(shapes):
        raise ValueError("n_total must be >= len(shapes)")
    centers = default_centers(base, mask)
    out = [np.asarray(s, dtype=np.float64).copy() for s in shapes]
    for j in range(n_total - len(shapes)):
        rng = substream(seed, STREAM_DATASET, 1, j)
        src = int(rng.integers(0, len(shapes)))
        src_params = out[src]
        deformed = deform_mesh(src_params, base, mask, steps=steps, centers=centers)
        fitted = None
        for attempt in range(MAX_REDRAWS):
            angle = rng.uniform(-ROTATION_RANGE, ROTATION_RANGE)
            shift = rng.uniform(-TRANSLATION_RANGE, TRANSLATION_RANGE, size=2)
            scale = rng.uniform(*SCALE_RANGE)
            cloud = surface_sample(deformed, n_samples, seed=seed + 104729 * j + attempt)
            cloud = _mount_transform(cloud, mask, angle, shift, scale)
            try:
                fitted = fit_deformation(cloud, base, mask, budget=fit_budget,
                                         seed=seed + j, steps=steps,
                                         centers=centers, n_samples=n_samples,
                                         init_params=src_params)
                break
            except FitFailureError:
                logger.warning("augmentation %d attempt %d failed, redrawing", j, attempt)
        if fitted is None:
            logger.warning("augmentation %d skipped after %d redraws", j, MAX_REDRAWS)
            continue
        out.append(fitted.params)
    return out


def synthetic_raw_dataset(kernel_count: int, n: int, seed: int, rank: int = 12,
                          weight_scale: float = 0.008, width_scale: float = 0.35,
                          width_center: float = -3.5) -> np.ndarray:
    """Structured random raw-parameter dataset (no fitting involved).

    Rows live on an affine rank-`rank` manifold so PCA recovers real
    structure; scales keep decoded fields in the stable flow regime.
    """
    rng = substream(seed, STREAM_DATASET, 2)
    m_raw = 4 * kernel_count
    modes = rng.normal(size=(rank, m_raw))
    modes /= np.linalg.norm(modes, axis=1, keepdims=True)
    coeff = rng.normal(size=(n, rank))
    data = coeff @ modes
    data = data.reshape(n, kernel_count, 4)
    data[:, :, :3] *= weight_scale * np.sqrt(m_raw / rank)
    data[:, :, 3] *= width_scale * np.sqrt(m_raw / rank)
    data[:, :, 3] += width_center
    return data.reshape(n, m_raw)
