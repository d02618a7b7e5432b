"""Expected improvement and its global maximization over the unit cube.

The acquisition surface is multimodal, so the maximizer ranks a pool of
uniform random candidates and refines the best few with bounded quasi-Newton
ascent (L-BFGS-B, central finite-difference gradients). Ranking and
refinement run on log(EI): once a campaign has nearly converged, raw EI
underflows to 0 across the whole cube and would reduce acquisition to random
sampling, while the log keeps the ordering defined arbitrarily deep into the
no-improvement tail. The whole procedure is deterministic for a given random
stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr

from .gp import GpModel

_FD_STEP = 1e-6
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class AcquisitionConfig:
    n_restarts: int = 20
    lbfgs_max_iterations: int = 20
    candidate_pool: int = 1000
    xi: float = 0.0

    def __post_init__(self):
        if min(self.n_restarts, self.lbfgs_max_iterations, self.candidate_pool) < 1:
            raise ValueError("counts must be >= 1")
        if self.xi < 0.0:
            raise ValueError("xi must be >= 0")


def expected_improvement(mean, std, best_y: float, xi: float = 0.0):
    """Expected improvement of N(mean, std^2) over ``best_y + xi``.

    Vectorized over ``mean`` and ``std``; at std = 0 the improvement is the
    deterministic max(mean - best_y - xi, 0). Always >= 0.
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    delta = mean - best_y - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        zscore = np.where(std > 0.0, delta / np.where(std > 0.0, std, 1.0), 0.0)
        ei = delta * ndtr(zscore) + std * _INV_SQRT_2PI * np.exp(-0.5 * zscore ** 2)
    ei = np.where(std > 0.0, ei, np.maximum(delta, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_TAIL_Z = -30.0
_SCORE_FLOOR = -1e12


def log_expected_improvement(mean, std, best_y: float, xi: float = 0.0):
    """log(EI), stable arbitrarily deep into the no-improvement tail.

    Agrees with log(expected_improvement(...)) wherever raw EI is
    representable; past z ~ -38 raw EI underflows to exactly 0 while this
    keeps the ordering BO needs in a nearly converged campaign. Scores are
    floored at a large negative constant so downstream optimizers never see
    infinities.
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    delta = np.broadcast_to(mean - best_y - xi, np.broadcast_shapes(mean.shape, std.shape))
    std = np.broadcast_to(std, delta.shape)
    scores = np.full(delta.shape, -np.inf)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # deterministic branch: EI = max(delta, 0)
        zero_sigma = std <= 0.0
        scores = np.where(zero_sigma & (delta > 0.0), np.log(np.maximum(delta, 0.0)), scores)

        z = np.where(zero_sigma, 0.0, delta / np.where(zero_sigma, 1.0, std))
        near = ~zero_sigma & (z >= _TAIL_Z)
        h = z * ndtr(z) + _INV_SQRT_2PI * np.exp(-0.5 * z ** 2)
        scores = np.where(near, np.log(std) + np.log(np.where(near, h, 1.0)), scores)

        # Mills-ratio tail: EI = std * phi(z) * (1/z^2 - 3/z^4 + 15/z^6 - ...)
        far = ~zero_sigma & (z < _TAIL_Z)
        zf = np.where(far, z, _TAIL_Z)
        z2 = zf * zf
        tail = (np.log(std) - 0.5 * z2 - _LOG_SQRT_2PI
                - np.log(z2) + np.log1p((-3.0 + 15.0 / z2) / z2))
        scores = np.where(far, tail, scores)

    scores = np.maximum(scores, _SCORE_FLOOR)
    return float(scores) if scores.ndim == 0 else scores


def maximize(model: GpModel, config: AcquisitionConfig, rng: np.random.Generator) -> np.ndarray:
    """Return the unit-cube point with the highest expected improvement found.

    Evaluates EI on ``candidate_pool`` uniform points, refines the best
    ``n_restarts`` of them with L-BFGS-B (box [0,1]^d, central-difference
    gradients), and reduces deterministically: ties in the pool break toward
    the lowest index, and the final winner is the first candidate achieving
    the maximum EI. The result always beats or ties every pool candidate.
    """
    d = model.d
    best_y = model.best_target

    def score_batch(points):
        mean, std = model.predict_many(points)
        return log_expected_improvement(mean, std, best_y, config.xi)

    pool = rng.random((config.candidate_pool, d))
    pool_scores = score_batch(pool)
    best_pool_index = int(np.argmax(pool_scores))
    starts = np.argsort(-pool_scores, kind="stable")[: config.n_restarts]

    probes = np.zeros((1 + 2 * d, d))

    def negative_score_and_grad(u):
        probes[:] = u
        for k in range(d):
            probes[1 + k, k] += _FD_STEP
            probes[1 + d + k, k] -= _FD_STEP
        values = score_batch(probes)
        grad = (values[1 : 1 + d] - values[1 + d :]) / (2.0 * _FD_STEP)
        return -values[0], -grad

    candidates = [pool[best_pool_index]]
    for start in starts:
        result = minimize(
            negative_score_and_grad,
            pool[start],
            jac=True,
            method="L-BFGS-B",
            bounds=[(0.0, 1.0)] * d,
            options={"maxiter": config.lbfgs_max_iterations},
        )
        candidates.append(np.clip(result.x, 0.0, 1.0))

    candidates = np.asarray(candidates)
    values = score_batch(candidates)
    return candidates[int(np.argmax(values))].copy()
