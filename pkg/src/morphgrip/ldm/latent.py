"""Whitened PCA latent space over raw deformation parameters."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import RankDeficientError


@dataclass(frozen=True)
class LatentModel:
    mean: np.ndarray  # (M_raw,)
    components: np.ndarray  # (M_latent, M_raw), orthonormal rows
    scales: np.ndarray  # (M_latent,), per-component standard deviation

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "components",
                           np.asarray(self.components, dtype=np.float64).reshape(-1, len(self.mean)))
        object.__setattr__(self, "scales", np.asarray(self.scales, dtype=np.float64).reshape(-1))
        if len(self.scales) != len(self.components):
            raise ValueError("scales and components disagree on latent dimension")

    @property
    def latent_dim(self) -> int:
        return len(self.scales)

    @property
    def raw_dim(self) -> int:
        return len(self.mean)


def build_latent(dataset: np.ndarray, m_latent: int) -> LatentModel:
    """Mean-centered PCA by SVD; scales are singular values / sqrt(N - 1)."""
    data = np.asarray(dataset, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("dataset must be an (N, M_raw) matrix")
    n = len(data)
    if m_latent < 1:
        raise ValueError("latent dimension must be >= 1")
    if n < m_latent:
        raise ValueError(f"need at least {m_latent} rows, got {n}")
    mean = data.mean(axis=0)
    centered = data - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    tol = max(centered.shape) * np.finfo(np.float64).eps * (svals[0] if len(svals) else 0.0)
    rank = int(np.sum(svals > max(tol, 1e-300)))
    if m_latent > rank:
        raise RankDeficientError(rank, m_latent)
    return LatentModel(mean=mean, components=vt[:m_latent],
                       scales=svals[:m_latent] / np.sqrt(n - 1))


def decode(model: LatentModel, z: np.ndarray) -> np.ndarray:
    """Whitened latent coordinates -> raw parameter vector."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if len(z) != model.latent_dim:
        raise ValueError(f"expected {model.latent_dim} latent coordinates, got {len(z)}")
    return model.mean + (z * model.scales) @ model.components


def encode(model: LatentModel, raw_params: np.ndarray) -> np.ndarray:
    """Least-squares projection onto the components, whitened."""
    x = np.asarray(raw_params, dtype=np.float64).reshape(-1)
    if len(x) != model.raw_dim:
        raise ValueError(f"expected {model.raw_dim} raw parameters, got {len(x)}")
    return (model.components @ (x - model.mean)) / model.scales


def reconstruction_error(model: LatentModel, data: np.ndarray) -> np.ndarray:
    """Per-row L2 error of encode-decode round trips."""
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    recon = np.array([decode(model, encode(model, row)) for row in data])
    return np.linalg.norm(recon - data, axis=1)


def save_latent_model(model: LatentModel, path: str) -> None:
    doc = {
        "mean": model.mean.tolist(),
        "components": model.components.tolist(),
        "scales": model.scales.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_latent_model(path: str) -> LatentModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return LatentModel(np.array(doc["mean"]), np.array(doc["components"]),
                       np.array(doc["scales"]))


def save_raw_params(params: np.ndarray, path: str, meta: dict | None = None) -> None:
    doc = {"raw_params": np.asarray(params, dtype=np.float64).tolist()}
    if meta:
        doc["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_raw_params(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return np.asarray(doc["raw_params"], dtype=np.float64)
