"""Fitting deformation parameters to target surfaces.

The objective is the symmetric squared Chamfer distance between transported
base-surface samples and a target cloud. Its gradient is computed by
reverse-mode differentiation through the unrolled RK4 flow, with
nearest-neighbor correspondences frozen at the current iterate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np

from ..errors import FitFailureError, FlowDivergenceError
from ..geomcore.chamfer import chamfer, nearest_indices
from ..geomcore.mesh import TriMesh, surface_sample
from .field import (
    DEFAULT_FLOW_STEPS,
    SIGMA_MIN,
    FreezeMask,
    RbfField,
    default_centers,
    sigmoid,
    softplus,
)

logger = logging.getLogger(__name__)

EARLY_STOP_PATIENCE = 320  # iterations without improvement before stopping
WARMUP_FRACTION = 0.1  # no early stop during the first tenth of the budget
MAX_CONSECUTIVE_REJECTS = 20
DEFAULT_FIT_SAMPLES = 4096
DEFAULT_LEARNING_RATE = 0.01


def _field_arrays(raw: np.ndarray, centers: np.ndarray, sigma_min: float):
    k = len(centers)
    raw = np.asarray(raw, dtype=np.float64).reshape(k, 4)
    weights = raw[:, :3]
    width_raw = raw[:, 3]
    widths = softplus(width_raw) + sigma_min
    return weights, widths, width_raw


class _FlowTape:
    """Forward RK4 pass that records stage positions for the backward sweep.

    Kernel math is phrased as matrix products on (n, K) arrays; no (n, K, 3)
    temporaries, which keeps large fits fast.
    """

    def __init__(self, raw: np.ndarray, centers: np.ndarray, mask: FreezeMask,
                 steps: int, sigma_min: float):
        self.centers = centers
        self.mask = mask
        self.steps = steps
        self.h = 1.0 / steps
        self.sigma_min = sigma_min
        self.weights, self.widths, self.width_raw = _field_arrays(raw, centers, sigma_min)
        self.c_sq = np.einsum("kj,kj->k", centers, centers)
        self.inv_2s2 = 1.0 / (2.0 * self.widths**2)
        self.stages: list[tuple[np.ndarray, ...]] = []

    def _phi(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x_sq = np.einsum("nj,nj->n", pts, pts)
        r2 = x_sq[:, None] + self.c_sq[None, :] - 2.0 * (pts @ self.centers.T)
        np.maximum(r2, 0.0, out=r2)
        return np.exp(-r2 * self.inv_2s2), r2

    def _velocity(self, pts: np.ndarray) -> np.ndarray:
        phi, _ = self._phi(pts)
        return self.mask.value(pts[:, 2])[:, None] * (phi @ self.weights)

    def forward(self, points: np.ndarray) -> np.ndarray:
        x = points.copy()
        h = self.h
        for _ in range(self.steps):
            a1 = x
            k1 = self._velocity(a1)
            a2 = x + 0.5 * h * k1
            k2 = self._velocity(a2)
            a3 = x + 0.5 * h * k2
            k3 = self._velocity(a3)
            a4 = x + h * k3
            k4 = self._velocity(a4)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                bad = int(np.nonzero(~np.all(np.isfinite(x), axis=1))[0][0])
                raise FlowDivergenceError(bad)
            self.stages.append((a1, a2, a3, a4))
        return x

    def _vjp(self, pts: np.ndarray, cot: np.ndarray,
             grad_w: np.ndarray, grad_s: np.ndarray) -> np.ndarray:
        """Accumulate parameter cotangents; return the position cotangent."""
        phi, r2 = self._phi(pts)
        m = self.mask.value(pts[:, 2])
        s_vec = phi @ self.weights  # (n, 3), unmasked field value
        u_dot_s = np.einsum("nj,nj->n", cot, s_vec)
        t = (m[:, None] * (cot @ self.weights.T)) * phi  # shared factor
        # d/d position: -sum_k t_nk / sigma_k^2 * (x_n - c_k)
        t_scaled = t / (self.widths**2)[None, :]
        gx = t_scaled @ self.centers - t_scaled.sum(axis=1)[:, None] * pts
        gx[:, 2] += u_dot_s * self.mask.derivative(pts[:, 2])
        # d/d weights and d/d width (then through softplus)
        grad_w += (m[:, None] * phi).T @ cot
        grad_s += (t * r2).sum(axis=0) / self.widths**3 * sigmoid(self.width_raw)
        return gx

    def backward(self, cot_final: np.ndarray) -> np.ndarray:
        """Cotangent of the final positions -> gradient w.r.t. raw params."""
        h = self.h
        k = len(self.centers)
        grad_w = np.zeros((k, 3))
        grad_s = np.zeros(k)
        u = cot_final.copy()
        for a1, a2, a3, a4 in reversed(self.stages):
            u_k4 = (h / 6.0) * u
            g4 = self._vjp(a4, u_k4, grad_w, grad_s)
            u_k3 = (h / 3.0) * u + h * g4
            g3 = self._vjp(a3, u_k3, grad_w, grad_s)
            u_k2 = (h / 3.0) * u + 0.5 * h * g3
            g2 = self._vjp(a2, u_k2, grad_w, grad_s)
            u_k1 = (h / 6.0) * u + 0.5 * h * g2
            g1 = self._vjp(a1, u_k1, grad_w, grad_s)
            u = u + g1 + g2 + g3 + g4
        grad = np.empty((k, 4))
        grad[:, :3] = grad_w
        grad[:, 3] = grad_s
        return grad.reshape(-1)


def chamfer_objective(raw_params: np.ndarray, base_samples: np.ndarray,
                      target: np.ndarray, mask: FreezeMask, steps: int,
                      centers: np.ndarray, sigma_min: float = SIGMA_MIN
                      ) -> tuple[float, np.ndarray]:
    """Sampled Chamfer value and its exact gradient w.r.t. raw parameters
    (correspondences held fixed at the current iterate).
    """
    tape = _FlowTape(raw_params, centers, mask, steps, sigma_min)
    moved = tape.forward(base_samples)
    na, nb = len(moved), len(target)
    idx_ab = nearest_indices(moved, target)
    idx_ba = nearest_indices(target, moved)
    d_ab = moved - target[idx_ab]
    d_ba = target - moved[idx_ba]
    value = float(np.sum(d_ab**2) / na + np.sum(d_ba**2) / nb)
    cot = (2.0 / na) * d_ab
    np.add.at(cot, idx_ba, -(2.0 / nb) * d_ba)
    grad = tape.backward(cot)
    return value, grad


def chamfer_gradient(raw_params: np.ndarray, base: TriMesh, mask: FreezeMask,
                     target: np.ndarray, steps: int = DEFAULT_FLOW_STEPS,
                     centers: np.ndarray | None = None,
                     n_samples: int = DEFAULT_FIT_SAMPLES, seed: int = 0,
                     sigma_min: float = SIGMA_MIN) -> np.ndarray:
    """Gradient of the sampled Chamfer objective for a base mesh."""
    if centers is None:
        centers = default_centers(base, mask)
    samples = surface_sample(base, n_samples, seed)
    _, grad = chamfer_objective(np.asarray(raw_params, dtype=np.float64), samples,
                                np.asarray(target, dtype=np.float64), mask, steps,
                                centers, sigma_min)
    return grad


@dataclass
class FitResult:
    params: np.ndarray
    initial_chamfer: float
    final_chamfer: float
    iterations: int
    stopped_early: bool
    history: list = dc_field(default_factory=list)  # (iteration, value, best) rows


def fit_deformation(target: np.ndarray, base: TriMesh, mask: FreezeMask,
                    budget: int, seed: int, steps: int = DEFAULT_FLOW_STEPS,
                    centers: np.ndarray | None = None,
                    n_samples: int = DEFAULT_FIT_SAMPLES,
                    learning_rate: float = DEFAULT_LEARNING_RATE,
                    init_params: np.ndarray | None = None,
                    sigma_min: float = SIGMA_MIN) -> FitResult:
    """Adam on the sampled Chamfer objective with best-so-far tracking.

    Stops once no improvement has been seen for EARLY_STOP_PATIENCE
    iterations, but never inside the first tenth of the budget. Diverging
    steps are rejected with the learning rate halved; too many consecutive
    rejections abort the fit.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    target = np.asarray(target, dtype=np.float64)
    if target.ndim != 2 or target.shape[0] == 0:
        raise ValueError("target must be a non-empty (n, 3) cloud")
    if centers is None:
        centers = default_centers(base, mask)
    k = len(centers)
    base_samples = surface_sample(base, n_samples, seed)

    if init_params is None:
        params = np.zeros(4 * k)
        # start widths near the kernel lattice spacing for useful support
        spans = centers.max(axis=0) - centers.min(axis=0)
        spacing = max(float(np.max(spans)) / 2.0, 4.0 * sigma_min)
        params.reshape(k, 4)[:, 3] = np.log(np.expm1(max(spacing - sigma_min, 1e-6)))
    else:
        params = np.asarray(init_params, dtype=np.float64).copy()

    m = np.zeros_like(params)
    v = np.zeros_like(params)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    lr = learning_rate

    value0, grad = chamfer_objective(params, base_samples, target, mask, steps,
                                     centers, sigma_min)
    best_value = value0
    best_params = params.copy()
    best_iter = 0
    warmup = max(1, int(np.ceil(WARMUP_FRACTION * budget)))
    history = [(0, value0, best_value)]
    rejects = 0
    adam_t = 0

    it = 0
    for it in range(1, budget + 1):
        adam_t += 1
        m = beta1 * m + (1 - beta1) * grad
        v = beta2 * v + (1 - beta2) * grad**2
        m_hat = m / (1 - beta1**adam_t)
        v_hat = v / (1 - beta2**adam_t)
        candidate = params - lr * m_hat / (np.sqrt(v_hat) + eps)
        try:
            value, new_grad = chamfer_objective(candidate, base_samples, target,
                                                mask, steps, centers, sigma_min)
        except FlowDivergenceError:
            rejects += 1
            lr *= 0.5
            logger.debug("fit step %d rejected (flow divergence), lr -> %.3g", it, lr)
            if rejects > MAX_CONSECUTIVE_REJECTS:
                raise FitFailureError(
                    f"{rejects} consecutive diverging steps at iteration {it}")
            continue
        rejects = 0
        params, grad = candidate, new_grad
        if value < best_value:
            best_value = value
            best_params = params.copy()
            best_iter = it
        history.append((it, value, best_value))
        if it > warmup and (it - best_iter) >= EARLY_STOP_PATIENCE:
            return FitResult(best_params, value0, best_value, it, True, history)
    return FitResult(best_params, value0, best_value, it, False, history)


def fitted_chamfer(params: np.ndarray, base: TriMesh, mask: FreezeMask,
                   target: np.ndarray, steps: int = DEFAULT_FLOW_STEPS,
                   centers: np.ndarray | None = None,
                   n_samples: int = DEFAULT_FIT_SAMPLES, seed: int = 0) -> float:
    """Chamfer between the deformed base surface and a target cloud."""
    if centers is None:
        centers = default_centers(base, mask)
    from .field import integrate_flow, unpack_params

    samples = surface_sample(base, n_samples, seed)
    moved = integrate_flow(unpack_params(params, centers), mask, samples, steps)
    return chamfer(moved, target)
