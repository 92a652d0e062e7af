"""Samplers for finite-volume Gibbs measures: exact rejection and a
birth-death-move-remark Metropolis-Hastings chain.

The chain draws a fixed schedule of variates per proposal kind (selector,
location/index, mark, acceptance uniform) before any accept/reject decision,
so two chains driven by the same stream stay coupled step for step as long as
their decisions agree; the cut-off kernel sampler relies on this to be
bit-identical to the full kernel once the cap and the environment window are
past their thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalFailure, PreconditionError
from .marks import MarkLaw
from .points import (
    Ball,
    Box,
    Configuration,
    MarkedPoint,
    Window,
    restrict,
    restrict_complement,
    window_contains,
)
from .tempered import is_tempered

__all__ = [
    "sample_poisson",
    "RejectionResult",
    "rejection_sample",
    "ProposalMix",
    "BoundaryCondition",
    "ChainState",
    "bdm_step",
    "ChainResult",
    "run_chain",
    "sample_cutoff_kernel",
    "birth_ratio",
    "death_ratio",
]


def _window_volume(window: Window) -> float:
    try:
        return window.volume()
    except NotImplementedError:
        raise PreconditionError(
            "sampling needs a window with a known volume (box or ball)"
        ) from None


def _draw_location(window: Window, rng: np.random.Generator) -> tuple[float, ...]:
    if isinstance(window, Box):
        lo, hi = window.bounds[:, 0], window.bounds[:, 1]
        u = rng.random(window.dimension)
        return tuple(float(v) for v in lo + u * (hi - lo))
    if isinstance(window, Ball):
        # bounding-box rejection; draw count is state independent
        bb = window.bounding_box()
        lo, hi = bb.bounds[:, 0], bb.bounds[:, 1]
        while True:
            x = lo + rng.random(window.dimension) * (hi - lo)
            if window.contains(x)[0]:
                return tuple(float(v) for v in x)
    raise PreconditionError(f"cannot sample uniformly from {type(window).__name__}")


def sample_poisson(
    window: Window, z: float, mark_law: MarkLaw, rng: np.random.Generator
) -> Configuration:
    """Poisson configuration: Poisson(z |W|) points placed uniformly, marks iid."""
    if z < 0:
        raise ValueError("activity z must be non-negative")
    if z == 0:
        return Configuration.empty(window.dimension)
    vol = _window_volume(window)
    n = int(rng.poisson(z * vol))
    pts = [
        MarkedPoint.make(_draw_location(window, rng), mark_law.sample(rng))
        for _ in range(n)
    ]
    return Configuration(pts, dimension=window.dimension)


@dataclass(frozen=True)
class RejectionResult:
    samples: tuple[Configuration, ...]
    n_proposed: int
    n_accepted: int

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_proposed if self.n_proposed else 0.0


def rejection_sample(
    model,
    window: Window,
    z: float,
    mark_law: MarkLaw,
    n_samples: int,
    rng: np.random.Generator,
    env: Configuration | None = None,
    max_proposals: int = 5_000_000,
    min_rate: float = 1e-4,
) -> RejectionResult:
    """Exact sampler for models with certified non-negative energy.

    Proposes Poisson configurations and accepts with probability exp(-H),
    which is a valid thinning exactly because H >= 0. With an environment the
    conditional energy is used (still non-negative for these models). Aborts
    with a diagnostic when the realised acceptance rate falls below
    ``min_rate``, rather than spinning forever.
    """
    if not getattr(model, "nonnegative", False):
        raise PreconditionError(
            f"model {model.model_id!r} does not certify H >= 0; rejection sampling invalid"
        )
    env_out = restrict_complement(env, window) if env is not None else None
    samples: list[Configuration] = []
    proposed = accepted = 0
    while len(samples) < n_samples:
        if proposed >= max_proposals:
            raise NumericalFailure(
                f"rejection sampler exceeded {max_proposals} proposals "
                f"({accepted} accepted)"
            )
        gamma = sample_poisson(window, z, mark_law, rng)
        proposed += 1
        h = (
            model.conditional_energy(gamma, env_out)
            if env_out is not None
            else (model.energy(gamma) if len(gamma) else 0.0)
        )
        if h < 0:
            raise NumericalFailure(
                f"model {model.model_id!r} produced negative energy {h} despite "
                "its non-negativity certificate"
            )
        if rng.random() < math.exp(-h):
            samples.append(gamma)
            accepted += 1
        if proposed % 2000 == 0 and accepted / proposed < min_rate:
            raise NumericalFailure(
                f"rejection acceptance rate {accepted}/{proposed} below {min_rate}; "
                "the energy scale is too large for exact sampling"
            )
    return RejectionResult(tuple(samples), proposed, accepted)


# ---------------------------------------------------------------------------
# Birth-death-move-remark chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProposalMix:
    """Move-kind probabilities. Birth and death must be proposed equally
    often; the acceptance ratios below assume that symmetry."""

    birth: float = 0.35
    death: float = 0.35
    move: float = 0.2
    remark: float = 0.1
    move_scale: float = 0.3

    def __post_init__(self):
        probs = (self.birth, self.death, self.move, self.remark)
        if any(p < 0 for p in probs) or self.birth <= 0:
            raise ValueError("move probabilities must be non-negative, birth positive")
        if abs(self.birth - self.death) > 1e-12:
            raise ValueError("birth and death must have equal proposal probability")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("move probabilities must sum to 1")
        if self.move > 0 and self.move_scale <= 0:
            raise ValueError("move_scale must be positive when moves are proposed")


@dataclass(frozen=True)
class BoundaryCondition:
    """Free boundary, or a fixed tempered environment configuration."""

    xi: Configuration | None = None
    t: int | None = None

    @staticmethod
    def free() -> "BoundaryCondition":
        return BoundaryCondition(None, None)

    @staticmethod
    def conditioned(xi: Configuration, t: int, delta: float) -> "BoundaryCondition":
        ok, report = is_tempered(xi, t, delta)
        if not ok:
            raise PreconditionError(
                f"boundary configuration is not {t}-tempered (minimal t = {report.minimal_t})"
            )
        return BoundaryCondition(xi, t)

    @property
    def is_free(self) -> bool:
        return self.xi is None


def birth_ratio(z_volume: float, n_after: int, dh: float) -> float:
    """Unclipped Hastings ratio for adding a point (n_after = n + 1)."""
    if dh == math.inf:
        return 0.0
    try:
        return z_volume / n_after * math.exp(-dh)
    except OverflowError:
        return math.inf


def death_ratio(z_volume: float, n_before: int, dh: float) -> float:
    """Unclipped Hastings ratio for removing a point from n_before points."""
    if dh == math.inf:
        return 0.0
    try:
        return n_before / z_volume * math.exp(-dh)
    except OverflowError:
        return math.inf


_KINDS = ("birth", "death", "move", "remark")


@dataclass
class ChainState:
    """Mutable chain state: interior atoms, fixed environment, cached energy."""

    window: Window
    points: list[MarkedPoint]
    env: Configuration
    cached_energy: float
    volume: float
    mark_cap: float | None = None
    step_count: int = 0
    proposals: dict = field(default_factory=lambda: {k: 0 for k in _KINDS})
    accepts: dict = field(default_factory=lambda: {k: 0 for k in _KINDS})

    def snapshot(self) -> Configuration:
        return Configuration(list(self.points), dimension=self.window.dimension)


def init_chain(
    model,
    window: Window,
    bc: BoundaryCondition | None = None,
    mark_cap: float | None = None,
) -> ChainState:
    """Fresh chain at the empty configuration (conditional energy 0)."""
    bc = bc or BoundaryCondition.free()
    env = (
        restrict_complement(bc.xi, window)
        if bc.xi is not None
        else Configuration.empty(window.dimension)
    )
    return ChainState(
        window=window,
        points=[],
        env=env,
        cached_energy=0.0,
        volume=_window_volume(window),
        mark_cap=mark_cap,
    )


def _delta_add(model, state: ChainState, p: MarkedPoint, skip: int = -1) -> float:
    """Energy increment for inserting p (skip hides one interior index)."""
    if model.pairwise:
        total = model.self_term(p)
        for i, q in enumerate(state.points):
            if i == skip:
                continue
            if q.location == p.location:
                return math.inf
            v = model.pair_term(p, q)
            if v == math.inf:
                return math.inf
            total += v
        for q in state.env.points:
            v = model.pair_term(p, q)
            if v == math.inf:
                return math.inf
            total += v
        return total
    pts = [q for i, q in enumerate(state.points) if i != skip]
    if any(q.location == p.location for q in pts):
        return math.inf
    trial = Configuration(pts + [p], dimension=state.window.dimension)
    base = (
        state.cached_energy
        if skip < 0
        else model.conditional_energy(
            Configuration(pts, dimension=state.window.dimension), state.env
        )
    )
    return model.conditional_energy(trial, state.env) - base


def _delta_remove(model, state: ChainState, idx: int) -> float:
    """Energy increment for deleting interior point idx (finite by invariant)."""
    p = state.points[idx]
    if model.pairwise:
        total = model.self_term(p)
        for i, q in enumerate(state.points):
            if i != idx:
                total += model.pair_term(p, q)
        for q in state.env.points:
            total += model.pair_term(p, q)
        return -total
    pts = [q for i, q in enumerate(state.points) if i != idx]
    trial = Configuration(pts, dimension=state.window.dimension)
    return model.conditional_energy(trial, state.env) - state.cached_energy


def _delta_swap(model, state: ChainState, idx: int, new_p: MarkedPoint) -> float:
    if model.pairwise:
        gain = _delta_add(model, state, new_p, skip=idx)
        if gain == math.inf:
            return math.inf
        loss = _delta_add(model, state, state.points[idx], skip=idx)
        return gain - loss
    pts = list(state.points)
    pts[idx] = new_p
    if any(
        q.location == new_p.location for i, q in enumerate(pts) if i != idx
    ):
        return math.inf
    trial = Configuration(pts, dimension=state.window.dimension)
    return model.conditional_energy(trial, state.env) - state.cached_energy


def bdm_step(
    state: ChainState,
    model,
    z: float,
    mark_law: MarkLaw,
    mix: ProposalMix,
    rng: np.random.Generator,
) -> ChainState:
    """One Metropolis-Hastings proposal, mutating the state in place.

    Acceptance probabilities: birth min(1, z|W| e^{-dH} / (n+1)), death
    min(1, n e^{-dH} / z|W|), move and remark min(1, e^{-dH}). Proposals
    whose increment is +inf are rejected after consuming their full draw
    schedule, as are births and remarks exceeding the mark cap.
    """
    u_kind = rng.random()
    n = len(state.points)
    zv = z * state.volume
    if u_kind < mix.birth:
        kind = "birth"
        loc = _draw_location(state.window, rng)
        mark = mark_law.sample(rng)
        u_acc = rng.random()
        state.proposals[kind] += 1
        p = MarkedPoint.make(loc, mark)
        if state.mark_cap is None or p.mark_norm <= state.mark_cap:
            dh = _delta_add(model, state, p)
            if u_acc < birth_ratio(zv, n + 1, dh):
                state.points.append(p)
                state.cached_energy += dh
                state.accepts[kind] += 1
    elif u_kind < mix.birth + mix.death:
        kind = "death"
        u_sel = rng.random()
        u_acc = rng.random()
        state.proposals[kind] += 1
        if n > 0:
            idx = min(int(u_sel * n), n - 1)
            dh = _delta_remove(model, state, idx)
            if u_acc < death_ratio(zv, n, dh):
                state.points.pop(idx)
                state.cached_energy += dh
                state.accepts[kind] += 1
    elif u_kind < mix.birth + mix.death + mix.move:
        kind = "move"
        u_sel = rng.random()
        disp = rng.standard_normal(state.window.dimension) * mix.move_scale
        u_acc = rng.random()
        state.proposals[kind] += 1
        if n > 0:
            idx = min(int(u_sel * n), n - 1)
            old = state.points[idx]
            new_loc = tuple(float(c + d) for c, d in zip(old.location, disp))
            if bool(state.window.contains(np.array(new_loc))[0]):
                new_p = MarkedPoint(new_loc, old.mark, old.mark_norm)
                dh = _delta_swap(model, state, idx, new_p)
                if dh < math.inf and u_acc < math.exp(-max(dh, -700.0)):
                    state.points[idx] = new_p
                    state.cached_energy += dh
                    state.accepts[kind] += 1
    else:
        kind = "remark"
        u_sel = rng.random()
        mark = mark_law.sample(rng)
        u_acc = rng.random()
        state.proposals[kind] += 1
        if n > 0:
            idx = min(int(u_sel * n), n - 1)
            new_p = MarkedPoint.make(state.points[idx].location, mark)
            if state.mark_cap is None or new_p.mark_norm <= state.mark_cap:
                dh = _delta_swap(model, state, idx, new_p)
                if dh < math.inf and u_acc < math.exp(-max(dh, -700.0)):
                    state.points[idx] = new_p
                    state.cached_energy += dh
                    state.accepts[kind] += 1
    state.step_count += 1
    return state


@dataclass(frozen=True)
class ChainStats:
    steps: int
    proposals: dict
    accepts: dict
    drift_checks: int
    max_drift: float
    final_energy: float


@dataclass(frozen=True)
class ChainResult:
    samples: tuple[Configuration, ...]
    stats: ChainStats
    final: Configuration


def run_chain(
    model,
    window: Window,
    z: float,
    mark_law: MarkLaw,
    steps: int,
    rng: np.random.Generator,
    bc: BoundaryCondition | None = None,
    mix: ProposalMix | None = None,
    burn_in: int = 0,
    thin: int = 1,
    mark_cap: float | None = None,
    drift_check_every: int = 10_000,
) -> ChainResult:
    """Run the chain from the empty configuration, collecting thinned samples.

    Every ``drift_check_every`` steps the cached energy is recomputed from
    scratch; a deviation above 1e-9 (relative to max(1, |H|)) aborts with a
    NumericalFailure carrying the step and both values.
    """
    if steps <= burn_in:
        raise PreconditionError("steps must exceed burn_in")
    if thin < 1:
        raise PreconditionError("thin must be >= 1")
    mix = mix or ProposalMix()
    state = init_chain(model, window, bc, mark_cap)
    samples: list[Configuration] = []
    max_drift = 0.0
    checks = 0
    for s in range(1, steps + 1):
        bdm_step(state, model, z, mark_law, mix, rng)
        if s % drift_check_every == 0:
            recomputed = model.conditional_energy(state.snapshot(), state.env)
            drift = abs(recomputed - state.cached_energy)
            checks += 1
            max_drift = max(max_drift, drift)
            if drift > 1e-9 * max(1.0, abs(recomputed)):
                raise NumericalFailure(
                    f"energy drift {drift:.3e} at step {s}: cached "
                    f"{state.cached_energy!r} vs recomputed {recomputed!r} "
                    f"(n = {len(state.points)})"
                )
        if s > burn_in and (s - burn_in) % thin == 0:
            samples.append(state.snapshot())
    stats = ChainStats(
        steps=steps,
        proposals=dict(state.proposals),
        accepts=dict(state.accepts),
        drift_checks=checks,
        max_drift=max_drift,
        final_energy=state.cached_energy,
    )
    return ChainResult(tuple(samples), stats, state.snapshot())


def sample_cutoff_kernel(
    model,
    lam: Window,
    delta_win: Window,
    m0: float,
    xi: Configuration,
    z: float,
    mark_law: MarkLaw,
    steps: int,
    rng: np.random.Generator,
    mix: ProposalMix | None = None,
    burn_in: int = 0,
    thin: int = 1,
    drift_check_every: int = 10_000,
) -> ChainResult:
    """Chain targeting the cut-off kernel: marks capped at m0, environment
    truncated to the moat window minus the interior window.

    Coincides with the full-kernel chain whenever no proposed mark exceeds m0
    and the moat window already contains every environment atom the full
    kernel can feel; the fixed draw schedule then makes the two runs
    bit-identical for the same stream.
    """
    if m0 < 0:
        raise PreconditionError("mark cap m0 must be non-negative")
    if not window_contains(delta_win, lam):
        raise PreconditionError("truncation window must contain the interior window")
    moat = restrict(restrict_complement(xi, lam), delta_win)
    bc = BoundaryCondition(moat, None)
    return run_chain(
        model,
        lam,
        z,
        mark_law,
        steps,
        rng,
        bc=bc,
        mix=mix,
        burn_in=burn_in,
        thin=thin,
        mark_cap=m0,
        drift_check_every=drift_check_every,
    )
