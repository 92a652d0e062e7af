"""Versioned library of bounded local test functionals.

Each functional reads the configuration only inside a fixed ball around the
origin and takes values in a bounded interval, so kernel consistency checks
can compare expectations without worrying about integrability. The library
is frozen under a version tag: acceptance numbers refer to these exact
definitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .points import Ball, Box, Configuration, restrict

__all__ = ["LIBRARY_VERSION", "LocalFunctional", "build_library"]

LIBRARY_VERSION = "1"


@dataclass(frozen=True)
class LocalFunctional:
    """Bounded functional depending only on atoms within support_radius of 0."""

    name: str
    support_radius: float
    bound: float
    fn: Callable[[Configuration], float]

    def __call__(self, config: Configuration) -> float:
        return self.fn(config)


def _count_in(region) -> Callable[[Configuration], int]:
    def count(config: Configuration) -> int:
        return len(restrict(config, region))

    return count


def build_library(d: int, delta: float) -> tuple[LocalFunctional, ...]:
    """The ten test functionals for dimension d and tail parameter delta."""
    if d < 1 or delta <= 0:
        raise ValueError("need d >= 1 and delta > 0")
    small_box = Box([[-0.5, 0.5]] * d)
    big_box = Box([[-1.0, 1.0]] * d)
    ball = Ball([0.0] * d, 1.0)
    small_ball = Ball([0.0] * d, 0.75)
    tiny_ball = Ball([0.0] * d, 0.5)
    r_small = 0.5 * math.sqrt(d)
    r_big = math.sqrt(d)
    n_small = _count_in(small_box)
    n_big = _count_in(big_box)
    n_ball = _count_in(ball)
    n_small_ball = _count_in(small_ball)
    n_tiny = _count_in(tiny_ball)

    def mark_sum_capped(config: Configuration) -> float:
        sub = restrict(config, big_box)
        return min(3.0, float(np.sum(sub.mark_norms())) if len(sub) else 0.0)

    def close_pairs_capped(config: Configuration) -> float:
        sub = restrict(config, big_box)
        if len(sub) < 2:
            return 0.0
        locs = sub.locations()
        diffs = locs[:, None, :] - locs[None, :, :]
        dist = np.sqrt((diffs**2).sum(axis=-1))
        pairs = int((dist[np.triu_indices(len(sub), k=1)] <= 1.0).sum())
        return float(min(pairs, 6))

    def tame_sum_capped(config: Configuration) -> float:
        sub = restrict(config, big_box)
        if len(sub) == 0:
            return 0.0
        return min(5.0, len(sub) + float(np.sum(sub.mark_norms() ** (d + delta))))

    return (
        LocalFunctional("count_small_box_cap4", r_small, 4.0, lambda c: float(min(n_small(c), 4))),
        LocalFunctional("count_big_box_cap8", r_big, 8.0, lambda c: float(min(n_big(c), 8))),
        LocalFunctional("count_unit_ball_cap4", 1.0, 4.0, lambda c: float(min(n_ball(c), 4))),
        LocalFunctional("void_ball_075", 0.75, 1.0, lambda c: float(n_small_ball(c) == 0)),
        LocalFunctional("void_small_box", r_small, 1.0, lambda c: float(n_small(c) == 0)),
        LocalFunctional("mark_sum_cap3", r_big, 3.0, mark_sum_capped),
        LocalFunctional("close_pairs_cap6", r_big, 6.0, close_pairs_capped),
        LocalFunctional("at_least_two_big_box", r_big, 1.0, lambda c: float(n_big(c) >= 2)),
        LocalFunctional("tame_sum_cap5", r_big, 5.0, tame_sum_capped),
        LocalFunctional("lonely_atom_half_ball", 0.5, 1.0, lambda c: float(n_tiny(c) == 1)),
    )
