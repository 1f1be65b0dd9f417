"""Covariance Matrix Adaptation Evolution Strategy, maximization convention.

Standard rank-mu + rank-one covariance update with cumulative step-size
adaptation. Used by both the pose optimizer and the design optimizer.
Box bounds are handled by clipping the returned candidates while keeping
the unclipped samples for the distribution update.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

EIGENVALUE_FLOOR = 1e-14


def default_population_size(n: int) -> int:
    return 4 + int(math.floor(3.0 * math.log(n)))


@dataclass
class CmaState:
    n: int
    mean: np.ndarray
    step_size: float
    covariance: np.ndarray
    p_c: np.ndarray
    p_sigma: np.ndarray
    lambda_pop: int
    mu: int
    weights: np.ndarray
    mu_eff: float
    c_c: float
    c_sigma: float
    c_1: float
    c_mu: float
    damps: float
    chi_n: float
    generation: int
    rng: np.random.Generator
    bounds: np.ndarray | None  # (n, 2) or None
    pending: np.ndarray | None = None  # unclipped samples from the last ask
    pending_clipped: np.ndarray | None = None
    best_x: np.ndarray | None = None
    best_f: float = -np.inf
    eval_log: list = field(default_factory=list)  # (candidate, fitness) pairs
    gen_log: list = field(default_factory=list)


def cma_init(n: int, mean0, sigma0: float, bounds=None, seed: int = 0,
             lambda_pop: int | None = None) -> CmaState:
    """Fresh optimizer state with standard strategy constants."""
    if n <= 0:
        raise ValueError("problem dimension must be positive")
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    lam = lambda_pop if lambda_pop is not None else default_population_size(n)
    if lam < 2:
        raise ValueError("population size must be >= 2")
    mu = lam // 2
    raw = np.log(lam / 2 + 0.5) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mu_eff = 1.0 / np.sum(weights**2)
    c_c = (4 + mu_eff / n) / (n + 4 + 2 * mu_eff / n)
    c_sigma = (mu_eff + 2) / (n + mu_eff + 5)
    c_1 = 2 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1 - c_1, 2 * (mu_eff - 2 + 1 / mu_eff) / ((n + 2) ** 2 + mu_eff))
    damps = 1 + 2 * max(0.0, math.sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma
    chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))
    b = None
    if bounds is not None:
        b = np.asarray(bounds, dtype=np.float64).reshape(n, 2)
        if np.any(b[:, 0] >= b[:, 1]):
            raise ValueError("each bound must satisfy lo < hi")
    return CmaState(
        n=n,
        mean=np.asarray(mean0, dtype=np.float64).reshape(n).copy(),
        step_size=float(sigma0),
        covariance=np.eye(n),
        p_c=np.zeros(n),
        p_sigma=np.zeros(n),
        lambda_pop=lam,
        mu=mu,
        weights=weights,
        mu_eff=float(mu_eff),
        c_c=float(c_c),
        c_sigma=float(c_sigma),
        c_1=float(c_1),
        c_mu=float(c_mu),
        damps=float(damps),
        chi_n=float(chi_n),
        generation=0,
        rng=np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed)))),
        bounds=b,
    )


def _decompose(state: CmaState) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition with symmetric enforcement and eigenvalue flooring."""
    c = 0.5 * (state.covariance + state.covariance.T)
    vals, vecs = np.linalg.eigh(c)
    if vals[0] <= 0.0 or not np.all(np.isfinite(vals)):
        logger.warning("covariance repaired: min eigenvalue %.3e floored to %.0e",
                       vals[0], EIGENVALUE_FLOOR)
        vals = np.where(np.isfinite(vals), vals, EIGENVALUE_FLOOR)
        vals = np.maximum(vals, EIGENVALUE_FLOOR)
        state.covariance = (vecs * vals) @ vecs.T
    return vals, vecs


def ask(state: CmaState) -> np.ndarray:
    """Sample lambda_pop candidates from N(mean, step_size^2 * covariance)."""
    vals, vecs = _decompose(state)
    z = state.rng.standard_normal((state.lambda_pop, state.n))
    y = z * np.sqrt(vals)  # scale in eigenbasis
    samples = state.mean + state.step_size * (y @ vecs.T)
    state.pending = samples
    if state.bounds is not None:
        clipped = np.clip(samples, state.bounds[:, 0], state.bounds[:, 1])
    else:
        clipped = samples.copy()
    state.pending_clipped = clipped
    return clipped.copy()


def tell(state: CmaState, candidates, fitnesses) -> CmaState:
    """Rank-based distribution update; fitnesses are to-maximize (NaN ranks worst)."""
    cands = np.asarray(candidates, dtype=np.float64)
    fits = np.asarray(fitnesses, dtype=np.float64)
    if len(cands) != state.lambda_pop or len(fits) != state.lambda_pop:
        raise ValueError(f"expected {state.lambda_pop} candidates/fitnesses, "
                         f"got {len(cands)}/{len(fits)}")
    if state.pending is None:
        raise ValueError("tell called before ask")

    # update uses the unclipped samples so the distribution stays consistent
    samples = state.pending
    state.pending = None
    state.pending_clipped = None

    rank_key = np.where(np.isnan(fits), -np.inf, fits)
    order = np.argsort(-rank_key, kind="stable")
    best_idx = order[0]
    if not np.isnan(fits[best_idx]) and fits[best_idx] > state.best_f:
        state.best_f = float(fits[best_idx])
        state.best_x = cands[best_idx].copy()
    for k in range(state.lambda_pop):
        state.eval_log.append((cands[k].copy(), float(fits[k])))

    n, mu, w = state.n, state.mu, state.weights
    old_mean = state.mean
    selected = samples[order[:mu]]
    new_mean = w @ selected
    y_w = (new_mean - old_mean) / state.step_size

    vals, vecs = _decompose(state)
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.T
    state.p_sigma = ((1 - state.c_sigma) * state.p_sigma
                     + math.sqrt(state.c_sigma * (2 - state.c_sigma) * state.mu_eff)
                     * (inv_sqrt @ y_w))
    gen = state.generation + 1
    ps_norm2 = float(state.p_sigma @ state.p_sigma)
    hsig = (ps_norm2 / n / (1 - (1 - state.c_sigma) ** (2 * gen))) < (2 + 4.0 / (n + 1))
    state.p_c = ((1 - state.c_c) * state.p_c
                 + hsig * math.sqrt(state.c_c * (2 - state.c_c) * state.mu_eff) * y_w)

    artmp = (selected - old_mean) / state.step_size
    delta_hsig = (1 - hsig) * state.c_c * (2 - state.c_c)
    state.covariance = ((1 - state.c_1 - state.c_mu) * state.covariance
                        + state.c_1 * (np.outer(state.p_c, state.p_c)
                                       + delta_hsig * state.covariance)
                        + state.c_mu * (artmp.T * w) @ artmp)
    state.step_size *= math.exp(min(1.0, (state.c_sigma / state.damps)
                                    * (math.sqrt(ps_norm2) / state.chi_n - 1)))
    state.mean = new_mean
    state.generation = gen
    finite = rank_key[np.isfinite(rank_key)]
    state.gen_log.append({
        "generation": gen,
        "best": float(fits[best_idx]) if np.isfinite(rank_key[best_idx]) else float("nan"),
        "mean_fitness": float(finite.mean()) if len(finite) else float("nan"),
        "step_size": state.step_size,
    })
    return state


def best(state: CmaState) -> tuple[np.ndarray, float]:
    """Best (candidate, fitness) over everything told so far."""
    if state.best_x is None:
        raise ValueError("no observations yet")
    return state.best_x.copy(), state.best_f


def optimize(func, mean0, sigma0: float, generations: int, bounds=None, seed: int = 0,
             lambda_pop: int | None = None, target: float | None = None) -> CmaState:
    """Run ask/tell for a fixed budget; `func` maps a candidate to a fitness."""
    mean0 = np.atleast_1d(np.asarray(mean0, dtype=np.float64))
    state = cma_init(len(mean0), mean0, sigma0, bounds=bounds, seed=seed,
                     lambda_pop=lambda_pop)
    for _ in range(generations):
        cands = ask(state)
        fits = [func(c) for c in cands]
        tell(state, cands, fits)
        if target is not None and state.best_f >= target:
            break
    return state
