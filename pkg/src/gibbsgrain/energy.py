"""Energy functionals on marked configurations, with conditional variants.

Every model maps a finite configuration to R union {+inf} with H(empty) = 0.
Pair-decomposable models expose self and pair terms so the conditional energy
given an environment is computed structurally: interior terms plus
interior-environment cross terms, where pairs beyond the interaction reach
contribute an exact floating-point zero. The quermass model is not
pair-decomposable; its conditional energy subtracts the environment's own
functional after pruning environment grains that do not meet the interior
grain union, which leaves the value of the stationary-limit definition
unchanged (inclusion-exclusion for area and Euler characteristic, boundary
bookkeeping for perimeter).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import PreconditionError
from .geometry import DiscSystem, euler_characteristic, union_area, union_perimeter
from .marks import PathMark
from .points import (
    Configuration,
    MarkedPoint,
    Window,
    mark_sup,
    restrict,
    restrict_complement,
    tame_statistic,
)
from .tempered import is_tempered, l_range

__all__ = [
    "EnergyModel",
    "IdealModel",
    "HardSphereModel",
    "PairPotentialModel",
    "QuermassModel",
    "DiffusionModel",
    "lj_pair",
    "energy",
    "conditional_energy",
    "interaction_range",
    "AdditivityReport",
    "additivity_check",
]

LJ_RANGE = 1.5
LJ_AMPLITUDE = 16.0


def lj_pair(u: float) -> float:
    """Lennard-Jones 12-6 pair value 16((1.5/u)^12 - (1.5/u)^6).

    Zero at u = 1.5, minimum -4 at u = 1.5 * 2^(1/6), repulsive below,
    attractive above. Evaluated as 16 t (t - 1) with t = (1.5/u)^6 so the
    small-u overflow saturates to +inf instead of producing nan.
    """
    if u <= 0:
        raise ValueError("pair distance must be positive")
    try:
        t = (LJ_RANGE / u) ** 6
        return LJ_AMPLITUDE * t * (t - 1.0)
    except OverflowError:
        return math.inf


class EnergyModel:
    """Interface: total energy, and conditional energy given an environment.

    ``nonnegative`` certifies H >= 0 (including conditional energies), which
    is what exact rejection sampling needs. ``pairwise`` marks models whose
    energy is a sum of self terms and pair terms.
    """

    model_id: str = "abstract"
    nonnegative: bool = False
    pairwise: bool = False

    def energy(self, config: Configuration) -> float:
        raise NotImplementedError

    def conditional_energy(self, interior: Configuration, environment: Configuration) -> float:
        """Energy of the interior given environment atoms (already outside the window)."""
        raise NotImplementedError

    def self_term(self, point: MarkedPoint) -> float:
        raise NotImplementedError

    def pair_term(self, p: MarkedPoint, q: MarkedPoint) -> float:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def validate_config(self, config: Configuration) -> None:
        """Hook for mark-type and dimension requirements; default accepts all."""


class _PairwiseModel(EnergyModel):
    pairwise = True

    def energy(self, config: Configuration) -> float:
        self.validate_config(config)
        pts = config.points
        total = 0.0
        for p in pts:
            total += self.self_term(p)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                v = self.pair_term(pts[i], pts[j])
                if v == math.inf:
                    return math.inf
                total += v
        return total

    def conditional_energy(self, interior: Configuration, environment: Configuration) -> float:
        self.validate_config(interior)
        total = self.energy(interior)
        if total == math.inf:
            return math.inf
        for p in interior.points:
            for q in environment.points:
                v = self.pair_term(p, q)
                if v == math.inf:
                    return math.inf
                total += v
        return total


class IdealModel(_PairwiseModel):
    """H identically zero: the reference Poisson case."""

    model_id = "ideal"
    nonnegative = True

    def self_term(self, point) -> float:
        return 0.0

    def pair_term(self, p, q) -> float:
        return 0.0

    def params(self) -> dict:
        return {}


class HardSphereModel(_PairwiseModel):
    """+inf when any two grains overlap, else 0.

    Grains are open balls B(x, |m|), so contact distance exactly equal to the
    radius sum does not overlap, and zero-radius grains never do.
    """

    model_id = "hardcore"
    nonnegative = True

    def self_term(self, point) -> float:
        return 0.0

    def pair_term(self, p, q) -> float:
        if p.mark_norm == 0.0 or q.mark_norm == 0.0:
            return 0.0
        d = math.dist(p.location, q.location)
        return math.inf if d < p.mark_norm + q.mark_norm else 0.0

    def params(self) -> dict:
        return {}


class PairPotentialModel(_PairwiseModel):
    """Non-negative pair interaction phi(|x-y|) gated by grain contact.

    Atoms interact only when |x - y| <= |m_1| + |m_2|; phi must satisfy
    phi(0) = 0 and phi >= 0, which is spot-checked at construction.
    """

    model_id = "nonnegpair"
    nonnegative = True

    def __init__(self, phi: Callable[[float], float], phi_id: str = "custom"):
        if abs(phi(0.0)) > 1e-12:
            raise ValueError("pair potential must vanish at zero distance")
        for u in (0.1, 0.5, 1.0, 2.0, 5.0):
            if phi(u) < 0:
                raise ValueError("pair potential must be non-negative")
        self.phi = phi
        self.phi_id = phi_id

    def self_term(self, point) -> float:
        return 0.0

    def pair_term(self, p, q) -> float:
        d = math.dist(p.location, q.location)
        if d > p.mark_norm + q.mark_norm:
            return 0.0
        return self.phi(d)

    def params(self) -> dict:
        return {"phi": self.phi_id}


class QuermassModel(EnergyModel):
    """Linear combination of area, perimeter, and Euler characteristic of the
    planar grain union. Bounded but not pair-decomposable: a grain chain can
    carry influence, yet the conditional energy only needs environment grains
    that meet the interior union directly (see module docstring)."""

    model_id = "quermass"
    nonnegative = False
    pairwise = False

    def __init__(self, a_area: float, a_perimeter: float, a_euler: float):
        self.a_area = float(a_area)
        self.a_perimeter = float(a_perimeter)
        self.a_euler = float(a_euler)

    def validate_config(self, config: Configuration) -> None:
        if len(config) and config.dimension != 2:
            raise PreconditionError("quermass energies are defined for d = 2")

    def _functional(self, system: DiscSystem) -> float:
        total = 0.0
        if self.a_area:
            total += self.a_area * union_area(system)
        if self.a_perimeter:
            total += self.a_perimeter * union_perimeter(system)
        if self.a_euler:
            total += self.a_euler * euler_characteristic(system)
        return total

    def energy(self, config: Configuration) -> float:
        self.validate_config(config)
        if len(config) == 0:
            return 0.0
        return self._functional(DiscSystem.from_configuration(config))

    def conditional_energy(self, interior: Configuration, environment: Configuration) -> float:
        self.validate_config(interior)
        if len(interior) == 0:
            return 0.0
        if len(environment) == 0:
            return self.energy(interior)
        locs_i = interior.locations()
        norms_i = interior.mark_norms()
        locs_e = environment.locations()
        norms_e = environment.mark_norms()
        # environment grains touching some interior grain (open-ball overlap)
        diff = locs_e[:, None, :] - locs_i[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        touches = np.any(dist < norms_e[:, None] + norms_i[None, :], axis=1)
        keep = [p for p, t in zip(environment.points, touches) if t]
        if not keep:
            return self.energy(interior)
        relevant = Configuration(keep)
        joint = DiscSystem.from_configuration(interior.union(relevant))
        alone = DiscSystem.from_configuration(relevant)
        return self._functional(joint) - self._functional(alone)

    def params(self) -> dict:
        return {
            "a_area": self.a_area,
            "a_perimeter": self.a_perimeter,
            "a_euler": self.a_euler,
        }


def _clipped_square(v):
    return np.minimum(v * v, 1.0e6)


def _default_psi(norm: float) -> float:
    return -1.0 - norm**2.5


class DiffusionModel(_PairwiseModel):
    """Paths as marks: confinement self term plus gated pair interaction.

    Pair term: phi(|x1 - x2|) + integral over s of phi_tilde(|m1(s) - m2(s)|),
    active only when |x1 - x2| <= a0 + |m1| + |m2|; the time integral uses the
    trapezoid rule on the shared sample grid. Marks must be PathMark objects
    with equal step counts.
    """

    model_id = "diffusion"
    nonnegative = False

    def __init__(
        self,
        a0: float = 1.5,
        phi: Callable[[float], float] = lj_pair,
        phi_tilde: Callable = _clipped_square,
        psi: Callable[[float], float] = _default_psi,
        phi_id: str = "lj",
        psi_id: str = "default",
    ):
        if a0 < 0:
            raise ValueError("gate offset a0 must be non-negative")
        self.a0 = float(a0)
        self.phi = phi
        self.phi_tilde = phi_tilde
        self.psi = psi
        self.phi_id = phi_id
        self.psi_id = psi_id

    def validate_config(self, config: Configuration) -> None:
        steps = None
        for p in config.points:
            if not isinstance(p.mark, PathMark):
                raise PreconditionError("diffusion model requires path marks")
            if steps is None:
                steps = p.mark.step_count
            elif p.mark.step_count != steps:
                raise PreconditionError("path marks must share one sample grid")

    def self_term(self, point) -> float:
        return float(self.psi(point.mark_norm))

    def pair_term(self, p, q) -> float:
        d = math.dist(p.location, q.location)
        if d > self.a0 + p.mark_norm + q.mark_norm:
            return 0.0
        sep = np.linalg.norm(p.mark.samples - q.mark.samples, axis=1)
        path_part = float(np.trapezoid(self.phi_tilde(sep), dx=1.0 / p.mark.step_count))
        return float(self.phi(d)) + path_part

    def conditional_energy(self, interior: Configuration, environment: Configuration) -> float:
        self.validate_config(environment)
        return super().conditional_energy(interior, environment)

    def params(self) -> dict:
        return {"a0": self.a0, "phi": self.phi_id, "psi": self.psi_id}


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------


def energy(model: EnergyModel, config: Configuration) -> float:
    """Total energy of a finite configuration; H(empty) = 0."""
    if len(config) == 0:
        return 0.0
    return model.energy(config)


def interaction_range(
    config: Configuration, window: Window, t: int, delta: float
) -> float:
    """Locality radius 2 l_range(t) + 2 sup-mark(interior) + 1.

    Enlarging the window by this radius captures every environment grain that
    can reach the window, for t-tempered environments.
    """
    d = config.dimension if len(config) else window.dimension
    return 2.0 * l_range(t, d, delta) + 2.0 * mark_sup(restrict(config, window)) + 1.0


def conditional_energy(
    model: EnergyModel,
    interior: Configuration,
    xi: Configuration,
    window: Window,
    t: int,
    delta: float,
    check_tempered: bool = True,
) -> float:
    """Energy of the interior configuration inside the window given xi outside.

    Preconditions: interior atoms lie in the window, and xi is t-tempered.
    Only the restriction of xi to the window complement enters the value.
    """
    if len(interior) and not bool(np.all(window.contains(interior.locations()))):
        raise PreconditionError("interior configuration has atoms outside the window")
    if check_tempered:
        ok, report = is_tempered(xi, t, delta)
        if not ok:
            raise PreconditionError(
                f"environment is not {t}-tempered (minimal t = {report.minimal_t})"
            )
    environment = restrict_complement(xi, window)
    return model.conditional_energy(interior, environment)


@dataclass(frozen=True)
class AdditivityReport:
    """Difference of window-increment energies for two interior fillings.

    residual should be 0: H_Delta - H_Lambda depends only on what sits outside
    Lambda, so swapping the interior filling cannot move it. ``comparable`` is
    False when an infinity made the difference meaningless.
    """

    residual: float
    comparable: bool
    increment_a: float
    increment_b: float


def additivity_check(
    model: EnergyModel,
    lam: Window,
    delta_win: Window,
    interior_a: Configuration,
    interior_b: Configuration,
    middle: Configuration,
    xi: Configuration,
    t: int,
    delta: float,
) -> AdditivityReport:
    """Check H_Delta = H_Lambda + (term independent of the Lambda interior).

    ``middle`` fills Delta minus Lambda and ``xi`` is the outside environment;
    both stay fixed while the Lambda interior switches between the two
    supplied fillings.
    """
    if len(middle) and bool(np.any(lam.contains(middle.locations()))):
        raise PreconditionError("middle configuration must avoid the inner window")
    increments = []
    for interior in (interior_a, interior_b):
        h_big = conditional_energy(
            model, interior.union(middle), xi, delta_win, t, delta, check_tempered=False
        )
        h_small = conditional_energy(
            model, interior, middle.union(xi), lam, t, delta, check_tempered=False
        )
        if math.isinf(h_big) or math.isinf(h_small):
            return AdditivityReport(math.nan, False, math.inf, math.inf)
        increments.append(h_big - h_small)
    return AdditivityReport(
        residual=increments[0] - increments[1],
        comparable=True,
        increment_a=increments[0],
        increment_b=increments[1],
    )
