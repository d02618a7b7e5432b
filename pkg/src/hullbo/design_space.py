"""Bounded design spaces: validation, unit-cube normalization and sampling.

A design point lives in native units (nm, cm^-3, ...). All surrogate-model
work happens on the unit cube, so each dimension declares how it maps there:
``linear`` dimensions map affinely, ``log10`` dimensions map through their
decade position (required for doping concentrations whose bounds span
multiplicative ranges).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SCALES = ("linear", "log10")


@dataclass(frozen=True)
class Dimension:
    """One bounded axis of a design space."""

    name: str
    lower: float
    upper: float
    scale: str = "linear"

    def __post_init__(self):
        if not self.name:
            raise ValueError("dimension name must be non-empty")
        if not (self.lower < self.upper):
            raise ValueError(
                f"dimension {self.name!r}: lower ({self.lower}) must be < upper ({self.upper})"
            )
        if self.scale not in SCALES:
            raise ValueError(f"dimension {self.name!r}: unknown scale {self.scale!r}")
        if self.scale == "log10" and self.lower <= 0.0:
            raise ValueError(f"dimension {self.name!r}: log10 scale requires lower > 0")


class DesignSpace:
    """An ordered set of named, bounded dimensions.

    Immutable after construction; all methods are pure functions, safe for
    concurrent use.
    """

    def __init__(self, dims):
        dims = tuple(dims)
        if not dims:
            raise ValueError("design space needs at least one dimension")
        names = [d.name for d in dims]
        if len(set(names)) != len(names):
            raise ValueError(f"dimension names must be unique, got {names}")
        self.dims = dims
        self.names = tuple(names)
        self._lower = np.array([d.lower for d in dims])
        self._upper = np.array([d.upper for d in dims])
        self._is_log = np.array([d.scale == "log10" for d in dims])
        # transformed-coordinate bounds (log10 of the bound for log dims)
        self._t_lower = np.where(self._is_log, np.log10(np.where(self._is_log, self._lower, 1.0)), self._lower)
        self._t_upper = np.where(self._is_log, np.log10(np.where(self._is_log, self._upper, 1.0)), self._upper)
        self._t_span = self._t_upper - self._t_lower

    @property
    def ndim(self) -> int:
        return len(self.dims)

    def __eq__(self, other):
        return isinstance(other, DesignSpace) and self.dims == other.dims

    def __hash__(self):
        return hash(self.dims)

    def __repr__(self):
        return f"DesignSpace({list(self.dims)!r})"

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no dimension named {name!r}") from None

    def validate(self, x) -> list[str]:
        """Return every violation of a candidate point, empty list if valid.

        Violations name the offending dimension; a length mismatch is reported
        as a single violation.
        """
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.ndim:
            return [f"point has {x.size} values, space has {self.ndim} dimensions"]
        problems = []
        for d, v in zip(self.dims, x):
            if not np.isfinite(v):
                problems.append(f"{d.name}: value {v} is not finite")
            elif v < d.lower or v > d.upper:
                problems.append(f"{d.name}: value {v:g} outside bounds [{d.lower:g}, {d.upper:g}]")
        return problems

    def check(self, x) -> np.ndarray:
        """Validate and return the point as an array; raise on any violation."""
        problems = self.validate(x)
        if problems:
            raise ValueError("invalid design point: " + "; ".join(problems))
        return np.asarray(x, dtype=float)

    def normalize(self, x) -> np.ndarray:
        """Map native-unit point(s) to the unit cube.

        Accepts a single point ``(d,)`` or a batch ``(n, d)``; the result has
        the same shape.
        """
        x = np.asarray(x, dtype=float)
        t = np.where(self._is_log, np.log10(np.where(x > 0, x, 1.0)), x)
        return (t - self._t_lower) / self._t_span

    def denormalize(self, u) -> np.ndarray:
        """Map unit-cube point(s) back to native units.

        Linear endpoints are exact; log10 endpoints round-trip through the
        exponential to within round-off. Results are clipped into the bounds
        so round-off can never produce an out-of-bounds point.
        """
        u = np.asarray(u, dtype=float)
        t = u * self._t_upper + (1.0 - u) * self._t_lower
        x = np.where(self._is_log, 10.0 ** np.where(self._is_log, t, 0.0), t)
        return np.clip(x, self._lower, self._upper)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` points i.i.d. uniform in normalized coordinates.

        Returns an ``(n, d)`` array in native units; deterministic for a given
        generator state.
        """
        if n < 0:
            raise ValueError("sample count must be >= 0")
        return self.denormalize(rng.random((n, self.ndim)))


@dataclass(frozen=True)
class DerivedGeometry:
    """Quantities fixed by the device process once the inputs are chosen."""

    drift_depth_um: float
    locos_taper_nm: float


def derived_geometry(space: DesignSpace, x) -> DerivedGeometry:
    """Compute the drift-region depth and LOCOS taper length for a point.

    The drift doping is a Gaussian profile peaking at 0.3 um depth, so the
    depth where it decays to the surface concentration is
    ``0.3 + 3 * sqrt(0.045 / ln(N_drift.1 / N_surface))`` um. The taper length
    is ``T_FOX * R`` (nm) exactly.

    Raises ValueError when the peak concentration does not exceed the surface
    concentration (the log term would be nonpositive).
    """
    x = np.asarray(x, dtype=float)
    n_peak = x[space.index_of("N_drift.1")]
    n_surface = x[space.index_of("N_surface")]
    if n_peak <= n_surface:
        raise ValueError(
            f"N_drift.1 ({n_peak:g}) must exceed N_surface ({n_surface:g}) "
            "for the drift depth to be defined"
        )
    depth = 0.3 + 3.0 * math.sqrt(0.045 / math.log(n_peak / n_surface))
    taper = x[space.index_of("T_FOX")] * x[space.index_of("R")]
    return DerivedGeometry(drift_depth_um=depth, locos_taper_nm=taper)


def ldmos9_space() -> DesignSpace:
    """The nine-parameter LDMOS space with LOCOS field oxide.

    Concentrations are searched on a log10 axis; everything else is linear.
    """
    return DesignSpace([
        Dimension("N_drift.1", 7e16, 2.5e17, "log10"),  # cm^-3, first Gaussian doping peak
        Dimension("L_drift.1", 250.0, 2700.0),          # nm, first Gaussian doping length
        Dimension("L_drift.2", 0.0, 500.0),             # nm, second Gaussian doping length
        Dimension("GP", 10.0, 99.0),                    # %, gate coverage of the FOX
        Dimension("L_JFET", 0.0, 700.0),                # nm, JFET region length
        Dimension("L_FOX", 750.0, 2000.0),              # nm, field-oxide length
        Dimension("N_surface", 1e16, 6e16, "log10"),    # cm^-3, drift surface concentration
        Dimension("T_FOX", 50.0, 150.0),                # nm, field-oxide thickness
        Dimension("R", 0.5, 5.0),                       # taper ratio L_step / T_FOX
    ])


def toy2d_space() -> DesignSpace:
    """Unit square domain of the two-parameter toy evaluator."""
    return DesignSpace([
        Dimension("x1", 0.0, 1.0),
        Dimension("x2", 0.0, 1.0),
    ])


BUILTIN_SPACES = {
    "ldmos9": ldmos9_space,
    "toy2d": toy2d_space,
}


def space_by_name(name: str) -> DesignSpace:
    try:
        return BUILTIN_SPACES[name]()
    except KeyError:
        raise KeyError(f"unknown builtin design space {name!r}; have {sorted(BUILTIN_SPACES)}") from None
