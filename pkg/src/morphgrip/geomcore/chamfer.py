"""Symmetric squared Chamfer distance between point clouds."""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..errors import EmptyCloudError


def _check_cloud(points: np.ndarray, name: str) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise EmptyCloudError(f"{name} must be a non-empty (n, 3) cloud, got shape {pts.shape}")
    return pts


def nearest_indices(query: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Index into `reference` of the nearest neighbor of each query point."""
    _, idx = cKDTree(reference).query(query, k=1)
    return idx


def chamfer(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared nearest-neighbor distance, symmetrized: both directions
    contribute their own mean. Units m^2; zero iff the clouds coincide.
    """
    a = _check_cloud(a, "a")
    b = _check_cloud(b, "b")
    da, _ = cKDTree(b).query(a, k=1)
    db, _ = cKDTree(a).query(b, k=1)
    return float(np.mean(da**2) + np.mean(db**2))
