"""Exact geometry of planar unions of open discs.

Area and perimeter come from a boundary-arc decomposition: each circle keeps
the angular intervals not covered by any other disc, perimeter is the summed
exposed arc length, and area is Green's theorem applied to the exposed arcs
(every exposed arc bounds the union counter-clockwise with respect to its own
circle, holes included, so one orientation rule covers everything).

The Euler characteristic is the alternating simplex count of the intersection
nerve. Discs are convex, so by Helly's theorem a set of discs has a common
point exactly when all its triples do; the enumeration therefore grows cliques
of the overlap graph and only ever tests triples.

Exactness is claimed away from degeneracies. Tangencies and triple points are
detected and broken by a deterministic 1e-7 radius bump with a logged warning,
as the documented convention.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import ndimage

from .errors import NumericalFailure

__all__ = [
    "Disc",
    "DiscSystem",
    "union_area",
    "union_perimeter",
    "euler_characteristic",
    "GeometryOracle",
    "mc_geometry_oracle",
    "random_disc_system",
]

log = logging.getLogger(__name__)

_TWO_PI = 2.0 * math.pi
_DEGENERACY_TOL = 1e-9
_PERTURB = 1e-7
_FACE_BUDGET = 5_000_000


@dataclass(frozen=True)
class Disc:
    x: float
    y: float
    r: float


class DiscSystem:
    """Canonicalised finite family of discs.

    Construction drops zero-radius grains and exact duplicates, then breaks
    tangencies and triple points by bumping radii; the bumps are deterministic
    so repeated construction of the same input gives the same system.
    """

    def __init__(self, discs):
        raw = [Disc(float(d.x), float(d.y), float(d.r)) for d in discs]
        self.discs, self.perturbed = _canonicalize(raw)
        self.n = len(self.discs)
        if self.n:
            self._cx = np.array([d.x for d in self.discs])
            self._cy = np.array([d.y for d in self.discs])
            self._r = np.array([d.r for d in self.discs])
        else:
            self._cx = self._cy = self._r = np.zeros(0)

    @staticmethod
    def from_arrays(centers, radii) -> "DiscSystem":
        centers = np.asarray(centers, dtype=float)
        radii = np.asarray(radii, dtype=float)
        if centers.ndim != 2 or centers.shape[1] != 2 or len(centers) != len(radii):
            raise ValueError("need (n, 2) centers and n radii")
        return DiscSystem(Disc(c[0], c[1], r) for c, r in zip(centers, radii))

    @staticmethod
    def from_configuration(config) -> "DiscSystem":
        if config.dimension != 2:
            raise ValueError("disc systems are planar; configuration has d != 2")
        locs = config.locations()
        return DiscSystem.from_arrays(locs, config.mark_norms())

    def bounding_box(self, pad: float = 0.0) -> tuple[float, float, float, float]:
        if self.n == 0:
            return (0.0, 1.0, 0.0, 1.0)
        return (
            float((self._cx - self._r).min() - pad),
            float((self._cx + self._r).max() + pad),
            float((self._cy - self._r).min() - pad),
            float((self._cy + self._r).max() + pad),
        )

    def covers(self, pts: np.ndarray) -> np.ndarray:
        """Boolean mask: point lies in the open union."""
        out = np.zeros(len(pts), dtype=bool)
        for d in self.discs:
            sub = ~out
            if not sub.any():
                break
            p = pts[sub]
            out[sub] = (p[:, 0] - d.x) ** 2 + (p[:, 1] - d.y) ** 2 < d.r * d.r
        return out

    def __len__(self) -> int:
        return self.n


def _canonicalize(discs: list[Disc]) -> tuple[list[Disc], bool]:
    kept = [d for d in discs if d.r > 0.0]
    seen, unique = set(), []
    for d in kept:
        key = (d.x, d.y, d.r)
        if key not in seen:
            seen.add(key)
            unique.append(d)
    perturbed = False
    for round_ in range(6):
        bad = _find_degenerate(unique)
        if not bad:
            if perturbed:
                log.warning(
                    "disc system had tangencies or triple points; radii perturbed by ~%g",
                    _PERTURB,
                )
            return unique, perturbed
        perturbed = True
        for rank, i in enumerate(sorted(bad)):
            d = unique[i]
            unique[i] = Disc(d.x, d.y, d.r + _PERTURB * (1 + rank + round_))
    raise NumericalFailure("could not break disc degeneracies after 6 perturbation rounds")


def _scale(discs: list[Disc]) -> float:
    return max(
        1.0, max((abs(d.x) + abs(d.y) + d.r for d in discs), default=1.0)
    )


def _find_degenerate(discs: list[Disc]) -> set[int]:
    """Indices involved in tangencies, coincidences, or triple points."""
    n = len(discs)
    tol = _DEGENERACY_TOL * _scale(discs)
    bad: set[int] = set()
    overlap: dict[int, set[int]] = {i: set() for i in range(n)}
    for i, j in combinations(range(n), 2):
        a, b = discs[i], discs[j]
        d = math.hypot(b.x - a.x, b.y - a.y)
        if d < tol and abs(a.r - b.r) < tol:
            bad.add(j)
            continue
        if abs(d - (a.r + b.r)) < tol:
            bad.add(j)
        if abs(d - abs(a.r - b.r)) < tol:
            bad.add(j)
        if d < a.r + b.r:
            overlap[i].add(j)
            overlap[j].add(i)
    for i, j in combinations(range(n), 2):
        if j not in overlap[i]:
            continue
        for p in _circle_vertices(discs[i], discs[j]):
            for k in overlap[i] & overlap[j]:
                c = discs[k]
                if abs(math.hypot(p[0] - c.x, p[1] - c.y) - c.r) < tol:
                    bad.add(k)
    return bad


def _circle_vertices(a: Disc, b: Disc) -> list[tuple[float, float]]:
    """Intersection points of the two boundary circles (empty if none)."""
    dx, dy = b.x - a.x, b.y - a.y
    d = math.hypot(dx, dy)
    if d == 0.0 or d >= a.r + b.r or d <= abs(a.r - b.r):
        return []
    t = (d * d + a.r * a.r - b.r * b.r) / (2.0 * d)
    h_sq = a.r * a.r - t * t
    if h_sq <= 0.0:
        return []
    h = math.sqrt(h_sq)
    ux, uy = dx / d, dy / d
    mx, my = a.x + t * ux, a.y + t * uy
    return [(mx - h * uy, my + h * ux), (mx + h * uy, my - h * ux)]


# ---------------------------------------------------------------------------
# Exposed-arc decomposition
# ---------------------------------------------------------------------------


def _exposed_arcs(i: int, discs: list[Disc]) -> list[tuple[float, float]]:
    """Arcs of circle i on the union boundary, as (theta1, theta2) with
    theta2 > theta1; an uncovered circle returns [(0, 2 pi)]."""
    a = discs[i]
    covered: list[tuple[float, float]] = []
    for j, b in enumerate(discs):
        if j == i:
            continue
        d = math.hypot(b.x - a.x, b.y - a.y)
        if d >= a.r + b.r:
            continue
        if d <= b.r - a.r:
            return []  # circle i entirely inside disc j
        if d <= a.r - b.r:
            continue  # disc j inside disc i, misses the boundary circle
        phi = math.atan2(b.y - a.y, b.x - a.x)
        cos_alpha = (d * d + a.r * a.r - b.r * b.r) / (2.0 * d * a.r)
        alpha = math.acos(min(1.0, max(-1.0, cos_alpha)))
        lo, hi = phi - alpha, phi + alpha
        lo %= _TWO_PI
        hi = lo + 2.0 * alpha
        if hi > _TWO_PI:
            covered.append((lo, _TWO_PI))
            covered.append((0.0, hi - _TWO_PI))
        else:
            covered.append((lo, hi))
    if not covered:
        return [(0.0, _TWO_PI)]
    covered.sort()
    merged = [list(covered[0])]
    for lo, hi in covered[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    exposed = []
    cursor = 0.0
    for lo, hi in merged:
        if lo > cursor:
            exposed.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < _TWO_PI:
        exposed.append((cursor, _TWO_PI))
    return exposed


def union_perimeter(system: DiscSystem) -> float:
    """Length of the boundary of the open disc union."""
    total = 0.0
    for i in range(system.n):
        for lo, hi in _exposed_arcs(i, system.discs):
            total += system.discs[i].r * (hi - lo)
    return total


def union_area(system: DiscSystem) -> float:
    """Area of the disc union via Green's theorem on the exposed arcs."""
    total = 0.0
    for i in range(system.n):
        d = system.discs[i]
        for lo, hi in _exposed_arcs(i, system.discs):
            total += 0.5 * (
                d.r * d.r * (hi - lo)
                + d.x * d.r * (math.sin(hi) - math.sin(lo))
                - d.y * d.r * (math.cos(hi) - math.cos(lo))
            )
    return total


# ---------------------------------------------------------------------------
# Euler characteristic via the intersection nerve
# ---------------------------------------------------------------------------


def _triple_solid(a: Disc, b: Disc, c: Disc) -> bool:
    """Whether the three open discs share a point (non-degenerate inputs)."""
    for u, v, w in ((a, b, c), (a, c, b), (b, c, a)):
        for p in _circle_vertices(u, v):
            if math.hypot(p[0] - w.x, p[1] - w.y) < w.r:
                return True
    for u, v, w in ((a, b, c), (b, a, c), (c, a, b)):
        if (
            math.hypot(u.x - v.x, u.y - v.y) < v.r
            and math.hypot(u.x - w.x, u.y - w.y) < w.r
        ):
            return True
    return False


def euler_characteristic(system: DiscSystem) -> int:
    """Alternating simplex count of the nerve of the disc family.

    Cliques of the pairwise overlap graph are grown in index order; a clique
    extension only needs its new triples checked (Helly in the plane reduces
    higher intersections to triples). Raises ArithmeticError if the clique
    complex exceeds the face budget.
    """
    discs = system.discs
    n = len(discs)
    if n == 0:
        return 0
    neighbors: list[set[int]] = [set() for _ in range(n)]
    for i, j in combinations(range(n), 2):
        a, b = discs[i], discs[j]
        if math.hypot(b.x - a.x, b.y - a.y) < a.r + b.r:
            neighbors[i].add(j)
            neighbors[j].add(i)
    solid_cache: dict[tuple[int, int, int], bool] = {}

    def solid(i: int, j: int, k: int) -> bool:
        key = (i, j, k)
        hit = solid_cache.get(key)
        if hit is None:
            hit = _triple_solid(discs[i], discs[j], discs[k])
            solid_cache[key] = hit
        return hit

    chi = 0
    faces = 0
    stack: list[tuple[list[int], list[int]]] = []
    for i in range(n):
        stack.append(([i], sorted(j for j in neighbors[i] if j > i)))
    while stack:
        clique, cands = stack.pop()
        faces += 1
        if faces > _FACE_BUDGET:
            raise NumericalFailure("nerve too large: overlap cliques exceed the face budget")
        chi += 1 if len(clique) % 2 == 1 else -1
        for idx, j in enumerate(cands):
            if all(solid(u, v, j) for u, v in combinations(clique, 2)):
                stack.append((clique + [j], [k for k in cands[idx + 1 :] if k in neighbors[j]]))
    return chi


# ---------------------------------------------------------------------------
# Monte Carlo / raster oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeometryOracle:
    area: float
    area_stderr: float
    chi: int
    chi_consensus: bool
    n_points: int
    grid: int


def _raster_chi(system: DiscSystem, grid: int) -> int:
    """Flood-fill Euler characteristic on a pixel grid.

    Components minus holes, both 8-connected. At a circle-circle vertex
    exactly one of the four local sectors belongs to the complement, so
    diagonal background steps cannot merge distinct complement regions;
    4-connected background, by contrast, strands sub-pixel wedge fragments
    at shallow crossing cusps and reports them as holes.
    """
    x0, x1, y0, y1 = system.bounding_box(pad=0.0)
    span = max(x1 - x0, y1 - y0)
    pad = 2.0 * span / grid
    gx0, gx1, gy0, gy1 = x0 - pad, x1 + pad, y0 - pad, y1 + pad
    nx = grid
    ny = max(8, int(round(grid * (gy1 - gy0) / (gx1 - gx0))))
    xs = np.linspace(gx0, gx1, nx)
    ys = np.linspace(gy0, gy1, ny)
    mask = np.zeros((ny, nx), dtype=bool)
    for d in system.discs:
        ix = np.where(np.abs(xs - d.x) <= d.r)[0]
        iy = np.where(np.abs(ys - d.y) <= d.r)[0]
        if len(ix) == 0 or len(iy) == 0:
            continue
        sub = (xs[ix][None, :] - d.x) ** 2 + (ys[iy][:, None] - d.y) ** 2 < d.r * d.r
        mask[np.ix_(iy, ix)] |= sub
    eight = np.ones((3, 3), dtype=int)
    _, n_comp = ndimage.label(mask, structure=eight)
    bg_labels, n_bg = ndimage.label(~mask, structure=eight)
    border = np.unique(
        np.concatenate(
            [bg_labels[0, :], bg_labels[-1, :], bg_labels[:, 0], bg_labels[:, -1]]
        )
    )
    border = border[border != 0]
    holes = n_bg - len(border)
    return int(n_comp - holes)


def raster_euler(system: DiscSystem, grid: int = 2048, max_rounds: int = 4) -> tuple[int, bool]:
    """Euler characteristic by consensus of successively finer rasters.

    A single fixed grid can misread a cusp whose complement wedge dips below
    one pixel exactly where the pixel centers land; such accidents do not
    repeat at a 1.5x finer grid. The first two consecutive resolutions that
    agree decide the value. Returns (chi, consensus_reached).
    """
    if system.n == 0:
        return 0, True
    prev = _raster_chi(system, grid)
    g = grid
    for _ in range(max_rounds):
        g = min(int(g * 1.5), 9000)
        cur = _raster_chi(system, g)
        if cur == prev:
            return cur, True
        prev = cur
        if g == 9000:
            break
    return prev, False


def mc_geometry_oracle(
    system: DiscSystem,
    n_points: int,
    rng: np.random.Generator,
    grid: int = 2048,
) -> GeometryOracle:
    """Hit-or-miss area estimate plus consensus raster Euler characteristic.

    Entirely independent of the arc decomposition and the nerve: area is
    estimated by uniform sampling over the bounding box, the characteristic
    by flood fill (see ``raster_euler``).
    """
    if n_points < 10_000:
        raise ValueError("oracle needs n_points >= 10000 for a usable stderr")
    if system.n == 0:
        return GeometryOracle(0.0, 0.0, 0, True, n_points, 0)
    x0, x1, y0, y1 = system.bounding_box(pad=0.0)
    box_area = (x1 - x0) * (y1 - y0)
    hits = 0
    block = 200_000
    done = 0
    while done < n_points:
        m = min(block, n_points - done)
        pts = np.empty((m, 2))
        pts[:, 0] = x0 + (x1 - x0) * rng.random(m)
        pts[:, 1] = y0 + (y1 - y0) * rng.random(m)
        hits += int(system.covers(pts).sum())
        done += m
    p_hat = hits / n_points
    area = box_area * p_hat
    stderr = box_area * math.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / n_points)
    chi, consensus = raster_euler(system, grid=grid)
    return GeometryOracle(area, stderr, chi, consensus, n_points, grid)


def random_disc_system(
    rng: np.random.Generator,
    n_discs: int,
    extent: float = 10.0,
    r_range: tuple[float, float] = (0.3, 1.2),
    margin: float = 0.03,
    max_tries: int = 3000,
) -> DiscSystem:
    """Random disc family kept clear of degeneracies by a margin.

    Discs are placed one at a time; a candidate is rejected when it creates a
    near-tangent pair, near-coincident centers, or a pair intersection vertex
    within ``margin`` of a third circle. The margins guarantee every geometric
    feature (lens, gap, hole wedge) is thicker than ``margin``, so exact and
    raster answers cannot disagree through sub-pixel features once the pixel
    size is below the margin.

    A vertex of a pair can only approach a third circle whose disc overlaps
    both pair members (the pair margin already keeps other circles away), so
    the triple scan is restricted to mutual overlaps.
    """
    r_lo, r_hi = r_range
    if not (0 < r_lo < r_hi):
        raise ValueError("need 0 < r_lo < r_hi")
    discs: list[Disc] = []
    overlap: list[set[int]] = []
    for _ in range(n_discs):
        for _try in range(max_tries):
            c = rng.random(2) * extent
            cand = Disc(float(c[0]), float(c[1]), float(r_lo + (r_hi - r_lo) * rng.random()))
            hits = _candidate_overlaps(cand, discs, margin)
            if hits is None:
                continue
            if _candidate_triples_ok(cand, discs, overlap, hits, margin):
                idx = len(discs)
                discs.append(cand)
                overlap.append(hits)
                for j in hits:
                    overlap[j].add(idx)
                break
        else:
            raise NumericalFailure(f"could not place disc {len(discs)} in {max_tries} draws")
    return DiscSystem(discs)


def _candidate_overlaps(cand: Disc, discs: list[Disc], margin: float) -> set[int] | None:
    """Pair-margin check of a candidate; returns its overlap set, or None on violation."""
    hits: set[int] = set()
    for j, d in enumerate(discs):
        dist = math.hypot(d.x - cand.x, d.y - cand.y)
        if dist < margin:
            return None
        if abs(dist - (cand.r + d.r)) < margin or abs(dist - abs(cand.r - d.r)) < margin:
            return None
        if dist < cand.r + d.r:
            hits.add(j)
    return hits


def _candidate_triples_ok(
    cand: Disc,
    discs: list[Disc],
    overlap: list[set[int]],
    hits: set[int],
    margin: float,
) -> bool:
    for i in hits:
        for p in _circle_vertices(cand, discs[i]):
            for k in hits & overlap[i]:
                c = discs[k]
                if abs(math.hypot(p[0] - c.x, p[1] - c.y) - c.r) < margin:
                    return False
    for i in hits:
        for j in hits & overlap[i]:
            if j <= i:
                continue
            for p in _circle_vertices(discs[i], discs[j]):
                if abs(math.hypot(p[0] - cand.x, p[1] - cand.y) - cand.r) < margin:
                    return False
    return True
