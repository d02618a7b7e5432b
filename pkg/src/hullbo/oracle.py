"""Exhaustive-search references for the builtin evaluators.

These provide independent ground truths the optimizer can be judged
against: a dense grid for the 2-D toy surface, and seeded random search with
coordinate-descent polish for the 9-D surrogate. Deliberately brute force;
nothing here shares code with the optimizer it checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design_space import ldmos9_space, toy2d_space
from .evaluators import ldmos9_values_normalized, toy2d_values


@dataclass(frozen=True)
class OracleResult:
    x: tuple[float, ...]      # native units
    bv: float
    rsp_on: float
    fom: float


def toy2d_grid_optimum(resolution: int = 1001, bv_target: float | None = None) -> OracleResult | None:
    """Best point of the toy surface on a ``resolution x resolution`` grid.

    With a target, maximizes FOM subject to BV >= target; returns None when
    no grid point is feasible.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    g = np.linspace(0.0, 1.0, resolution)
    x1, x2 = np.meshgrid(g, g, indexing="ij")
    bv, rsp, fom = toy2d_values(x1, x2)
    search = fom
    if bv_target is not None:
        feasible = bv >= bv_target
        if not feasible.any():
            return None
        search = np.where(feasible, fom, -np.inf)
    i, j = np.unravel_index(np.argmax(search), search.shape)
    return OracleResult(
        x=(float(x1[i, j]), float(x2[i, j])),
        bv=float(bv[i, j]),
        rsp_on=float(rsp[i, j]),
        fom=float(fom[i, j]),
    )


def _coordinate_descent(u0: np.ndarray, bv_target: float | None,
                        sweeps: int = 100, step0: float = 0.05, step_min: float = 1e-5) -> np.ndarray:
    """Polish a normalized candidate: axis steps with halving on stagnation."""

    def score(u):
        bv, _, fom = ldmos9_values_normalized(u[None, :])
        if bv_target is not None and bv[0] < bv_target:
            return -np.inf
        return fom[0]

    u = u0.copy()
    best = score(u)
    step = step0
    for _ in range(sweeps):
        improved = False
        for k in range(u.size):
            for direction in (step, -step):
                candidate = u.copy()
                candidate[k] = min(1.0, max(0.0, candidate[k] + direction))
                value = score(candidate)
                if value > best:
                    best, u, improved = value, candidate, True
        if not improved:
            step *= 0.5
            if step < step_min:
                break
    return u


def ldmos9_search_optimum(
    n_samples: int = 1_000_000,
    seed: int = 0,
    bv_target: float | None = None,
) -> OracleResult | None:
    """Best surrogate point from seeded random search plus local polish.

    Draws ``n_samples`` uniform points, keeps the best (feasible) one, and
    refines it by coordinate descent. Deterministic for a given seed. Returns
    None when no sample is feasible.
    """
    rng = np.random.default_rng(seed)
    space = ldmos9_space()
    best_u = None
    best_fom = -np.inf
    chunk = 200_000
    remaining = n_samples
    while remaining > 0:
        u = rng.random((min(chunk, remaining), 9))
        remaining -= u.shape[0]
        bv, _, fom = ldmos9_values_normalized(u)
        if bv_target is not None:
            fom = np.where(bv >= bv_target, fom, -np.inf)
        i = int(np.argmax(fom))
        if fom[i] > best_fom:
            best_fom = float(fom[i])
            best_u = u[i].copy()
    if best_u is None or not np.isfinite(best_fom):
        return None
    u = _coordinate_descent(best_u, bv_target)
    bv, rsp, fom = (float(v[0]) for v in ldmos9_values_normalized(u[None, :]))
    return OracleResult(
        x=tuple(float(v) for v in space.denormalize(u)),
        bv=bv,
        rsp_on=rsp,
        fom=fom,
    )
