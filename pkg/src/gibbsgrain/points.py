"""Finite marked configurations on R^d and the observation windows they live in.

A configuration is a finite simple collection of (location, mark) atoms. Marks are
either non-negative scalars (grain radii) or path objects exposing a ``sup_norm``
attribute; the mark norm is cached on the point so energy and temperedness code
never recomputes it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "MarkedPoint",
    "Configuration",
    "Window",
    "Box",
    "Ball",
    "DilatedWindow",
    "dilate",
    "window_contains",
    "restrict",
    "restrict_complement",
    "tame_statistic",
    "mark_sup",
    "ModelParams",
]

_NORM_RTOL = 1e-12


def _mark_norm_of(mark) -> float:
    """Norm of a mark: |value| for scalars, sup norm for path marks."""
    sup = getattr(mark, "sup_norm", None)
    if sup is not None:
        return float(sup)
    return abs(float(mark))


@dataclass(frozen=True)
class MarkedPoint:
    """One atom (x, m) with its cached mark norm."""

    location: tuple[float, ...]
    mark: object
    mark_norm: float

    def __post_init__(self):
        expected = _mark_norm_of(self.mark)
        tol = _NORM_RTOL * max(1.0, abs(expected))
        if not math.isfinite(self.mark_norm) or abs(self.mark_norm - expected) > tol:
            raise ValueError(
                f"mark_norm {self.mark_norm!r} disagrees with recomputed norm {expected!r}"
            )

    @staticmethod
    def make(location: Sequence[float], mark) -> "MarkedPoint":
        loc = tuple(float(c) for c in location)
        return MarkedPoint(loc, mark, _mark_norm_of(mark))

    @property
    def dimension(self) -> int:
        return len(self.location)


class Configuration:
    """Immutable finite simple marked configuration.

    Simplicity (no two atoms at the same location) is enforced at construction;
    everything downstream may assume it.
    """

    __slots__ = ("points", "dimension", "_locs", "_norms")

    def __init__(self, points: Iterable[MarkedPoint], dimension: int | None = None):
        pts = tuple(points)
        if pts:
            dims = {p.dimension for p in pts}
            if len(dims) != 1:
                raise ValueError(f"mixed dimensions in configuration: {sorted(dims)}")
            d = dims.pop()
            if dimension is not None and dimension != d:
                raise ValueError(f"declared dimension {dimension} != point dimension {d}")
            seen = set()
            for p in pts:
                if p.location in seen:
                    raise ValueError(f"duplicate location {p.location}: configurations are simple")
                seen.add(p.location)
        else:
            d = dimension
            if d is None:
                raise ValueError("empty configuration needs an explicit dimension")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "_locs", None)
        object.__setattr__(self, "_norms", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("Configuration is immutable")

    @staticmethod
    def empty(dimension: int) -> "Configuration":
        return Configuration((), dimension=dimension)

    @staticmethod
    def from_arrays(locations, marks) -> "Configuration":
        locations = np.asarray(locations, dtype=float)
        if locations.ndim != 2:
            raise ValueError("locations must be an (n, d) array")
        if len(locations) != len(marks):
            raise ValueError("locations and marks length mismatch")
        return Configuration(
            MarkedPoint.make(loc, mark) for loc, mark in zip(locations, marks)
        )

    def locations(self) -> np.ndarray:
        if self._locs is None:
            arr = (
                np.array([p.location for p in self.points], dtype=float)
                if self.points
                else np.zeros((0, self.dimension))
            )
            arr.flags.writeable = False
            object.__setattr__(self, "_locs", arr)
        return self._locs

    def mark_norms(self) -> np.ndarray:
        if self._norms is None:
            arr = np.array([p.mark_norm for p in self.points], dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, "_norms", arr)
        return self._norms

    def union(self, other: "Configuration") -> "Configuration":
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch in union")
        return Configuration(self.points + other.points, dimension=self.dimension)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[MarkedPoint]:
        return iter(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.dimension == other.dimension and set(self.points) == set(other.points)

    def __hash__(self) -> int:
        return hash((self.dimension, frozenset(self.points)))

    def __repr__(self) -> str:
        return f"Configuration(n={len(self)}, d={self.dimension})"


# ---------------------------------------------------------------------------
# Windows
# ---------------------------------------------------------------------------


class Window:
    """Bounded observation region: membership test plus box bounds.

    ``contains`` follows each concrete window's own boundary convention
    (half-open boxes, open balls, closed dilations); ``distance`` is the
    Euclidean distance to the closure, which is what dilation needs.
    """

    dimension: int

    def contains(self, locations: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def distance(self, locations: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounding_box(self) -> "Box":
        raise NotImplementedError

    def volume(self) -> float:
        raise NotImplementedError


def _as_points(locations, dimension: int) -> np.ndarray:
    arr = np.asarray(locations, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[-1] != dimension:
        raise ValueError(f"points have dimension {arr.shape[-1]}, window has {dimension}")
    return arr


class Box(Window):
    """Half-open axis parallel box: lo_i <= x_i < hi_i."""

    def __init__(self, bounds):
        b = np.asarray(bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2:
            raise ValueError("bounds must be a (d, 2) array of (lo, hi) pairs")
        if np.any(b[:, 0] >= b[:, 1]):
            raise ValueError("each lo must be < hi")
        b.flags.writeable = False
        self.bounds = b
        self.dimension = b.shape[0]

    @staticmethod
    def centered_cube(n: float, dimension: int) -> "Box":
        """[-n, n)^d; n=1,2,... gives the standard exhausting cubes."""
        if n <= 0:
            raise ValueError("half-width must be positive")
        return Box([(-float(n), float(n))] * dimension)

    @staticmethod
    def unit(dimension: int) -> "Box":
        return Box([(0.0, 1.0)] * dimension)

    def contains(self, locations) -> np.ndarray:
        x = _as_points(locations, self.dimension)
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        return np.all((x >= lo) & (x < hi), axis=-1)

    def distance(self, locations) -> np.ndarray:
        x = _as_points(locations, self.dimension)
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        gap = np.maximum(np.maximum(lo - x, x - hi), 0.0)
        return np.linalg.norm(gap, axis=-1)

    def bounding_box(self) -> "Box":
        return self

    def volume(self) -> float:
        return float(np.prod(self.bounds[:, 1] - self.bounds[:, 0]))

    def circumradius(self) -> float:
        """Radius of the smallest origin-centred ball containing the box closure."""
        corners = np.abs(self.bounds).max(axis=1)
        return float(np.linalg.norm(corners))

    def __repr__(self) -> str:
        pairs = ", ".join(f"[{lo:g},{hi:g})" for lo, hi in self.bounds)
        return f"Box({pairs})"


class Ball(Window):
    """Open Euclidean ball B(center, radius)."""

    def __init__(self, center, radius: float):
        c = np.asarray(center, dtype=float)
        if c.ndim != 1:
            raise ValueError("center must be a vector")
        if radius <= 0:
            raise ValueError("radius must be positive")
        c.flags.writeable = False
        self.center = c
        self.radius = float(radius)
        self.dimension = c.shape[0]

    def contains(self, locations) -> np.ndarray:
        x = _as_points(locations, self.dimension)
        return np.linalg.norm(x - self.center, axis=-1) < self.radius

    def distance(self, locations) -> np.ndarray:
        x = _as_points(locations, self.dimension)
        return np.maximum(np.linalg.norm(x - self.center, axis=-1) - self.radius, 0.0)

    def bounding_box(self) -> Box:
        lo = self.center - self.radius
        hi = self.center + self.radius
        return Box(np.stack([lo, hi], axis=1))

    def volume(self) -> float:
        d = self.dimension
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.radius**d

    def __repr__(self) -> str:
        return f"Ball(center={tuple(self.center)}, radius={self.radius:g})"


class DilatedWindow(Window):
    """Closed r-neighbourhood of a base window (Minkowski sum with a closed ball).

    Membership only: the exact volume of a dilated box is not needed anywhere,
    so ``volume`` raises rather than approximating.
    """

    def __init__(self, base: Window, margin: float):
        if margin < 0:
            raise ValueError("dilation margin must be non-negative")
        self.base = base
        self.margin = float(margin)
        self.dimension = base.dimension

    def contains(self, locations) -> np.ndarray:
        return self.base.distance(locations) <= self.margin

    def distance(self, locations) -> np.ndarray:
        return np.maximum(self.base.distance(locations) - self.margin, 0.0)

    def bounding_box(self) -> Box:
        inner = self.base.bounding_box().bounds
        return Box(np.stack([inner[:, 0] - self.margin, inner[:, 1] + self.margin], axis=1))

    def volume(self) -> float:
        raise NotImplementedError("dilated windows support membership tests only")

    def __repr__(self) -> str:
        return f"DilatedWindow({self.base!r}, margin={self.margin:g})"


def dilate(window: Window, r: float) -> Window:
    """Minkowski dilation of a window by the closed ball of radius r.

    Balls dilate to balls; anything else becomes a membership-only
    ``DilatedWindow``. r = 0 gives the closure of the base window.
    """
    if r < 0:
        raise ValueError(f"dilation radius must be non-negative, got {r}")
    if isinstance(window, Ball):
        return Ball(window.center, window.radius + r)
    if isinstance(window, DilatedWindow):
        return DilatedWindow(window.base, window.margin + r)
    return DilatedWindow(window, r)


def window_contains(outer: Window, inner: Window) -> bool:
    """True when every point of ``inner`` lies in ``outer``.

    Exact for nested boxes and balls; other pairings fall back to testing the
    corners of the inner bounding box, which is exact for convex outer windows
    up to boundary-contact cases.
    """
    if inner.dimension != outer.dimension:
        raise ValueError("windows live in different dimensions")
    if isinstance(inner, Ball):
        if isinstance(outer, Ball):
            gap = float(np.linalg.norm(inner.center - outer.center))
            return gap + inner.radius <= outer.radius
        if isinstance(outer, Box):
            return bool(
                np.all(outer.bounds[:, 0] <= inner.center - inner.radius)
                and np.all(inner.center + inner.radius <= outer.bounds[:, 1])
            )
    if isinstance(inner, Box) and isinstance(outer, Box):
        return bool(
            np.all(outer.bounds[:, 0] <= inner.bounds[:, 0])
            and np.all(inner.bounds[:, 1] <= outer.bounds[:, 1])
        )
    box = inner.bounding_box().bounds
    corners = np.array(list(itertools.product(*box)))
    return bool(np.all(outer.contains(corners)))


# ---------------------------------------------------------------------------
# Configuration functionals
# ---------------------------------------------------------------------------


def restrict(config: Configuration, window: Window) -> Configuration:
    """Sub-configuration of atoms whose location lies in the window."""
    if len(config) == 0:
        return config
    mask = window.contains(config.locations())
    return Configuration(
        (p for p, keep in zip(config.points, mask) if keep), dimension=config.dimension
    )


def restrict_complement(config: Configuration, window: Window) -> Configuration:
    """Sub-configuration of atoms strictly outside the window."""
    if len(config) == 0:
        return config
    mask = window.contains(config.locations())
    return Configuration(
        (p for p, keep in zip(config.points, mask) if not keep), dimension=config.dimension
    )


def tame_statistic(config: Configuration, delta: float) -> float:
    """sum over atoms of 1 + |m|^(d + delta); 0 for the empty configuration."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if len(config) == 0:
        return 0.0
    norms = config.mark_norms()
    return float(len(config) + np.sum(norms ** (config.dimension + delta)))


def mark_sup(config: Configuration) -> float:
    """Largest mark norm; 0 for the empty configuration."""
    if len(config) == 0:
        return 0.0
    return float(config.mark_norms().max())


@dataclass(frozen=True)
class ModelParams:
    """Shared scalar parameters: dimension, tail exponent offset, activity."""

    d: int
    delta: float
    z: float

    def __post_init__(self):
        if self.d < 1 or int(self.d) != self.d:
            raise ValueError("d must be a positive integer")
        if not (self.delta > 0):
            raise ValueError("delta must be positive")
        if not (self.z > 0):
            raise ValueError("z must be positive")

    @property
    def tail_exponent(self) -> float:
        return self.d + self.delta
