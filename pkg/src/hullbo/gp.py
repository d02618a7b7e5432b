"""Gaussian-process regression on the unit cube.

Isotropic squared-exponential kernel, Cholesky factorization with escalating
jitter, targets standardized to zero mean and unit variance. The length scale
is fixed (default 1.0 on normalized inputs) unless a maximum-likelihood refit
is explicitly enabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize_scalar


class SingularFitError(RuntimeError):
    """Factorization failed even at the maximum allowed jitter."""


@dataclass(frozen=True)
class GpConfig:
    length_scale: float = 1.0
    jitter_start: float = 1e-10
    jitter_max: float = 1e-6
    optimize_length_scale: bool = False

    def __post_init__(self):
        if self.length_scale <= 0.0:
            raise ValueError("length_scale must be positive")
        if not (0.0 < self.jitter_start <= self.jitter_max):
            raise ValueError("need 0 < jitter_start <= jitter_max")


@dataclass(frozen=True)
class GpPrediction:
    """Posterior at one query point, in original target units."""

    mean: float
    std: float


def _sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at 0 against round-off."""
    d2 = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.maximum(d2, 0.0)


def _kernel(a: np.ndarray, b: np.ndarray, length_scale: float) -> np.ndarray:
    return np.exp(_sqdist(a, b) / (-2.0 * length_scale ** 2))


def _cholesky_with_jitter(K: np.ndarray, jitter_start: float, jitter_max: float):
    """Factor K + jitter*I, escalating jitter by 10x until it succeeds.

    Returns ``(L, jitter)`` with L lower triangular. Raises SingularFitError
    once the jitter ceiling is exceeded.
    """
    n = K.shape[0]
    jitter = jitter_start
    eye = np.eye(n)
    while True:
        try:
            return cholesky(K + jitter * eye, lower=True), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > jitter_max:
                raise SingularFitError(
                    f"kernel matrix not factorizable at jitter {jitter_max:g}"
                ) from None


class GpModel:
    """Fitted Gaussian process; immutable, predictions are read-only."""

    def __init__(self, inputs, z, y_mean, y_std, L, alpha, length_scale, jitter):
        self.inputs = inputs          # (n, d) unit-cube training inputs
        self.z = z                    # (n,) standardized targets
        self.y_mean = y_mean
        self.y_std = y_std
        self.L = L                    # lower Cholesky factor of K + jitter*I
        self.alpha = alpha            # (K + jitter*I)^-1 z
        self.length_scale = length_scale
        self.jitter = jitter

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    @property
    def best_target(self) -> float:
        """Largest training target, in original units."""
        return float(self.y_mean + self.y_std * np.max(self.z))

    def predict_many(self, u) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at query points ``(q, d)``.

        Returns ``(mean, std)`` arrays of length q, in original target units.
        The standard deviation is clamped at 0 after round-off.
        """
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if u.shape[1] != self.d:
            raise ValueError(f"query has {u.shape[1]} dims, model has {self.d}")
        k = _kernel(u, self.inputs, self.length_scale)      # (q, n)
        mean = self.y_mean + self.y_std * (k @ self.alpha)
        v = solve_triangular(self.L, k.T, lower=True)        # (n, q)
        var = np.maximum(1.0 - np.sum(v * v, axis=0), 0.0)
        return mean, self.y_std * np.sqrt(var)

    def predict(self, u) -> GpPrediction:
        """Posterior at a single query point."""
        mean, std = self.predict_many(np.asarray(u, dtype=float)[None, :])
        return GpPrediction(float(mean[0]), float(std[0]))


def _negative_log_marginal_likelihood(inputs, z, length_scale, config) -> float:
    K = _kernel(inputs, inputs, length_scale)
    try:
        L, _ = _cholesky_with_jitter(K, config.jitter_start, config.jitter_max)
    except SingularFitError:
        return math.inf
    alpha = cho_solve((L, True), z)
    n = len(z)
    return float(0.5 * z @ alpha + np.sum(np.log(np.diag(L))) + 0.5 * n * math.log(2.0 * math.pi))


def _ml_length_scale(inputs, z, config: GpConfig) -> float:
    """Maximum-likelihood length scale on a log10 grid around the default."""
    result = minimize_scalar(
        lambda t: _negative_log_marginal_likelihood(inputs, z, 10.0 ** t, config),
        bounds=(-2.0, 1.0),
        method="bounded",
        options={"maxiter": 40, "xatol": 1e-3},
    )
    return float(10.0 ** result.x)


def fit(inputs, y, config: GpConfig = GpConfig()) -> GpModel:
    """Fit the GP to unit-cube inputs and raw targets.

    Targets are standardized internally (std floored at 1e-12 so constant
    targets fit cleanly); the model interpolates the training data up to
    jitter-induced error.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if inputs.shape[0] != y.shape[0]:
        raise ValueError(f"{inputs.shape[0]} inputs vs {y.shape[0]} targets")
    if inputs.shape[0] < 1:
        raise ValueError("need at least one training point")
    if not np.all(np.isfinite(inputs)) or not np.all(np.isfinite(y)):
        raise ValueError("training data must be finite")

    y_mean = float(np.mean(y))
    y_std = max(float(np.std(y)), 1e-12)
    z = (y - y_mean) / y_std

    length_scale = config.length_scale
    if config.optimize_length_scale and inputs.shape[0] >= 2:
        length_scale = _ml_length_scale(inputs, z, config)

    K = _kernel(inputs, inputs, length_scale)
    L, jitter = _cholesky_with_jitter(K, config.jitter_start, config.jitter_max)
    alpha = cho_solve((L, True), z)
    return GpModel(inputs, z, y_mean, y_std, L, alpha, length_scale, jitter)
