"""Lagrange multipliers from the upper convex hull of (BV, FOM) observations.

The empirical trade-off frontier between breakdown voltage and figure of
merit is the upper chain of the convex hull of everything evaluated so far.
The multiplier for a target BV is the negated slope of the hull segment the
target falls in, which prices a volt of BV in FOM units; folding it into
``FOM + lambda * (BV - BV_target)`` turns the constrained problem into an
unconstrained one.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass


@dataclass(frozen=True)
class FrontierPoint:
    """One observed (BV, FOM) pair, tagged with the record it came from."""

    bv: float
    fom: float
    source_index: int


@dataclass(frozen=True)
class UpperHull:
    """Vertices of the minimal concave majorant, ordered by increasing BV.

    Segment slopes are non-increasing and every input point lies on or below
    the piecewise-linear interpolant through these vertices.
    """

    points: tuple[FrontierPoint, ...]

    @property
    def bv_min(self) -> float:
        return self.points[0].bv

    @property
    def bv_max(self) -> float:
        return self.points[-1].bv

    def value_at(self, bv: float) -> float:
        """Interpolant value at ``bv``, extended by the end segments outside the span."""
        pts = self.points
        if len(pts) == 1:
            return pts[0].fom
        j = bisect_right([p.bv for p in pts], bv) - 1
        j = min(max(j, 0), len(pts) - 2)
        a, b = pts[j], pts[j + 1]
        slope = (b.fom - a.fom) / (b.bv - a.bv)
        return a.fom + slope * (bv - a.bv)


def _cross(o: FrontierPoint, a: FrontierPoint, b: FrontierPoint) -> float:
    return (a.bv - o.bv) * (b.fom - o.fom) - (a.fom - o.fom) * (b.bv - o.bv)


def upper_hull(points) -> UpperHull:
    """Upper chain of the convex hull of frontier points.

    Duplicate BVs are collapsed to their best FOM first (the hull needs
    distinct abscissae); collinear interior points are excluded, so the
    vertex set is minimal. Monotone-chain construction, O(n log n).
    """
    points = list(points)
    if not points:
        raise ValueError("need at least one frontier point")
    # collapse duplicate BVs: keep max FOM, breaking ties toward the earliest source
    points.sort(key=lambda p: (p.bv, -p.fom, p.source_index))
    distinct: list[FrontierPoint] = []
    for p in points:
        if not distinct or p.bv != distinct[-1].bv:
            distinct.append(p)
    chain: list[FrontierPoint] = []
    for p in distinct:
        while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) >= 0.0:
            chain.pop()
        chain.append(p)
    return UpperHull(tuple(chain))


@dataclass(frozen=True)
class LagrangeState:
    """Multiplier for one target BV, plus the hull evidence it came from.

    ``segment`` holds the hull vertex indices whose chord priced the
    multiplier (None for a degenerate hull); ``clamped`` records that the
    target fell outside the hull span and the nearest end segment was used.
    """

    lam: float
    bv_target: float
    segment: tuple[int, int] | None
    hull: UpperHull | None
    clamped: bool = False

    @staticmethod
    def inactive(bv_target: float) -> "LagrangeState":
        """A zero-multiplier state (warm-up iterations, unconstrained runs)."""
        return LagrangeState(0.0, bv_target, None, None)


def multiplier(hull: UpperHull, bv_target: float) -> LagrangeState:
    """Price the target BV from the hull: the negated slope of its segment.

    A target at a vertex uses the segment to its right; a target outside the
    hull span uses the nearest end segment and sets the clamp flag. A hull
    with fewer than two vertices has no slope, so the multiplier is 0.
    """
    pts = hull.points
    if not pts:
        raise ValueError("empty hull")
    clamped = bv_target < pts[0].bv or bv_target > pts[-1].bv
    if len(pts) < 2:
        return LagrangeState(0.0, bv_target, None, hull, clamped)
    j = bisect_right([p.bv for p in pts], bv_target) - 1
    j = min(max(j, 0), len(pts) - 2)
    a, b = pts[j], pts[j + 1]
    lam = -(b.fom - a.fom) / (b.bv - a.bv)
    return LagrangeState(lam, bv_target, (j, j + 1), hull, clamped)


def lagrangian(fom_value: float, bv: float, state: LagrangeState) -> float:
    """Adaptive objective ``FOM + lambda * (BV - BV_target)``.

    The constant ``-lambda * BV_target`` term is kept (not dropped) so logged
    values stay comparable across iterations with different targets.
    """
    return fom_value + state.lam * (bv - state.bv_target)


def hull_csv(hull: UpperHull) -> str:
    """Hull vertices as CSV (bv, fom, source_index), 17 significant digits."""
    lines = ["bv,fom,source_index"]
    for p in hull.points:
        lines.append(f"{p.bv:.17g},{p.fom:.17g},{p.source_index}")
    return "\n".join(lines) + "\n"
