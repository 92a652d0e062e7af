"""Verification-grade estimators: partition functions, entropy, empirical
fields, and kernel-consistency residuals.

Everything here consumes immutable sample batches and aggregates in a fixed
order, so reports are bit-reproducible given the seeds. The kernel
compatibility check for enumerable instances lives in the discrete module
and is re-exported for convenience.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .audits import mark_statistic
from .discrete import kernel_compatibility_check, tv_distance
from .errors import ConfigError, PreconditionError
from .functionals import LocalFunctional
from .marks import MarkLaw
from .points import (
    Ball,
    Box,
    Configuration,
    MarkedPoint,
    Window,
    restrict,
    restrict_complement,
    tame_statistic,
)
from .rng import stream
from .sampler import rejection_sample, run_chain, sample_poisson

__all__ = [
    "PartitionReport",
    "partition_estimate",
    "JStatistic",
    "j_statistic",
    "EntropyReport",
    "relative_entropy_estimate",
    "EntropyPoint",
    "EntropyCurve",
    "specific_entropy_curve",
    "FieldDraw",
    "empirical_field_draw",
    "DlrReport",
    "dlr_residual",
    "kernel_compatibility_check",
    "tv_distance",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Partition function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartitionReport:
    z_hat: float
    stderr: float
    log_z_hat: float
    log_stderr: float
    n_samples: int
    n_infinite: int
    lower_bound: float
    degenerate: bool


def partition_estimate(
    model,
    window: Window,
    z: float,
    mark_law: MarkLaw,
    n_samples: int,
    rng: np.random.Generator,
    env: Configuration | None = None,
) -> PartitionReport:
    """Importance-sampling estimate of the normalizer: mean of exp(-H) over
    Poisson draws, with a jackknife-corrected log estimate.

    The empty configuration contributes weight one, so the true value is at
    least exp(-z |W|); the report carries that floor. A batch in which every
    draw has infinite energy yields estimate 0 with a logged warning instead
    of an exception (it is a legitimate outcome for hard cores at high
    activity, and the caller sees ``degenerate=True``).
    """
    if n_samples < 1000:
        raise PreconditionError("partition_estimate needs at least 1000 samples")
    env_out = restrict_complement(env, window) if env is not None else None
    weights = np.empty(n_samples)
    n_inf = 0
    for i in range(n_samples):
        gamma = sample_poisson(window, z, mark_law, rng)
        if env_out is not None:
            h = model.conditional_energy(gamma, env_out)
        else:
            h = model.energy(gamma) if len(gamma) else 0.0
        if h == math.inf:
            weights[i] = 0.0
            n_inf += 1
        else:
            weights[i] = math.exp(-min(max(h, -700.0), 700.0))
    z_hat = float(weights.mean())
    stderr = float(weights.std(ddof=1) / math.sqrt(n_samples))
    lower = math.exp(-z * window.volume())
    if z_hat == 0.0:
        log.warning(
            "all %d importance draws had infinite energy; partition estimate "
            "degenerates to 0",
            n_samples,
        )
        return PartitionReport(
            0.0, stderr, math.nan, math.nan, n_samples, n_inf, lower, True
        )
    total = weights.sum()
    loo = np.log((total - weights) / (n_samples - 1))
    log_plug = math.log(z_hat)
    log_jack = n_samples * log_plug - (n_samples - 1) * float(loo.mean())
    log_se = float(
        math.sqrt((n_samples - 1) / n_samples * np.sum((loo - loo.mean()) ** 2))
    )
    return PartitionReport(
        z_hat, stderr, log_jack, log_se, n_samples, n_inf, lower, False
    )


# ---------------------------------------------------------------------------
# Tame-statistic growth
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JStatistic:
    j_hat: float
    stderr: float
    n_samples: int


def j_statistic(samples: Sequence[Configuration], delta: float) -> JStatistic:
    """Empirical mean of the weighted atom count over a sample batch."""
    if len(samples) < 100:
        raise PreconditionError("j_statistic needs at least 100 samples")
    vals = np.array([tame_statistic(c, delta) for c in samples])
    return JStatistic(
        float(vals.mean()),
        float(vals.std(ddof=1) / math.sqrt(len(vals))),
        len(vals),
    )


# ---------------------------------------------------------------------------
# Relative entropy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyReport:
    i_hat: float
    log_z: float
    mean_energy: float
    per_volume: float
    stderr: float
    per_volume_stderr: float
    n_samples: int
    volume: float

    @property
    def nonneg_ok(self) -> bool:
        """Relative entropy is non-negative; flag estimates below -3 sigma."""
        return self.i_hat >= -3.0 * self.stderr


def relative_entropy_estimate(
    model,
    window: Window,
    samples: Sequence[Configuration],
    partition: PartitionReport,
) -> EntropyReport:
    """Relative entropy of the finite-volume law w.r.t. its Poisson reference:
    I = -E[H] - log Z, with errors propagated from both estimates."""
    if partition.degenerate:
        raise PreconditionError("partition estimate degenerated to 0; no log Z")
    energies = np.array(
        [model.energy(c) if len(c) else 0.0 for c in samples], dtype=float
    )
    if not np.all(np.isfinite(energies)):
        raise PreconditionError(
            "samples with infinite energy cannot come from the target law"
        )
    mean_h = float(energies.mean())
    se_h = float(energies.std(ddof=1) / math.sqrt(len(energies)))
    i_hat = -mean_h - partition.log_z_hat
    se = math.sqrt(se_h**2 + partition.log_stderr**2)
    vol = window.volume()
    report = EntropyReport(
        i_hat, partition.log_z_hat, mean_h, i_hat / vol, se, se / vol,
        len(samples), vol,
    )
    if not report.nonneg_ok:
        log.warning(
            "relative entropy estimate %.4g is negative beyond 3 sigma (%.4g); "
            "energy and partition estimates disagree",
            i_hat, se,
        )
    return report


@dataclass(frozen=True)
class EntropyPoint:
    n: int
    volume: float
    mean_energy: float
    log_z: float
    i_hat: float
    stderr: float
    per_volume: float
    per_volume_stderr: float
    a1_hat: float
    ceiling: float


@dataclass(frozen=True)
class EntropyCurve:
    points: tuple[EntropyPoint, ...]
    c_hat: float
    z: float
    exponent: float

    @property
    def under_ceiling(self) -> bool:
        return all(
            p.per_volume + 3.0 * p.per_volume_stderr <= p.ceiling for p in self.points
        )

    @property
    def trend_ok(self) -> bool:
        """No upward step larger than the combined 3-sigma width."""
        for i, a in enumerate(self.points):
            for b in self.points[i + 1 :]:
                width = 3.0 * math.hypot(a.per_volume_stderr, b.per_volume_stderr)
                if b.per_volume - a.per_volume > width:
                    return False
        return True


def specific_entropy_curve(
    model,
    d: int,
    n_list: Sequence[int],
    z: float,
    mark_law: MarkLaw,
    delta: float,
    seed: int,
    n_energy_samples: int = 400,
    n_partition_samples: int = 2000,
    chain_steps: int = 40_000,
    stat_exponent: float | None = None,
    audit_c: float | None = None,
) -> EntropyCurve:
    """Per-volume relative entropy on centered cubes [-n, n)^d.

    Energy samples come from the exact rejection sampler when the model
    certifies H >= 0 and from the chain otherwise. The ceiling is
    c_hat * a1_hat + z, where c_hat is the worst -H/statistic ratio observed
    across the audit (if supplied) and these very samples, and a1_hat is the
    per-volume mean statistic; by construction -mean(H) <= c_hat * mean(stat)
    on the realized batch, so only the log Z term can push the curve above
    the ceiling.
    """
    if list(n_list) != sorted(set(int(n) for n in n_list)):
        raise PreconditionError("n_list must be strictly increasing")
    exponent = stat_exponent if stat_exponent is not None else d + delta
    per_n: list[dict] = []
    c_hat = -math.inf if audit_c is None else audit_c
    for i, n in enumerate(n_list):
        window = Box.centered_cube(n, d)
        if getattr(model, "nonnegative", False):
            res = rejection_sample(
                model, window, z, mark_law, n_energy_samples, stream(seed, 10 + i)
            )
            samples = list(res.samples)
        else:
            thin = max(1, chain_steps // (2 * n_energy_samples))
            out = run_chain(
                model, window, z, mark_law, chain_steps, stream(seed, 10 + i),
                burn_in=chain_steps // 2, thin=thin,
            )
            samples = list(out.samples)
        part = partition_estimate(
            model, window, z, mark_law, n_partition_samples, stream(seed, 60 + i)
        )
        report = relative_entropy_estimate(model, window, samples, part)
        stats = [mark_statistic(c, exponent) for c in samples]
        energies = [model.energy(c) if len(c) else 0.0 for c in samples]
        for h, s in zip(energies, stats):
            if s > 0:
                c_hat = max(c_hat, -h / s)
        a1 = float(np.mean(stats)) / window.volume()
        per_n.append(
            {"n": int(n), "report": report, "a1": a1}
        )
    points = tuple(
        EntropyPoint(
            row["n"],
            row["report"].volume,
            row["report"].mean_energy,
            row["report"].log_z,
            row["report"].i_hat,
            row["report"].stderr,
            row["report"].per_volume,
            row["report"].per_volume_stderr,
            row["a1"],
            c_hat * row["a1"] + z,
        )
        for row in per_n
    )
    return EntropyCurve(points, c_hat, z, exponent)


# ---------------------------------------------------------------------------
# Empirical field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldDraw:
    config: Configuration
    shift: tuple[int, ...]
    n_blocks: int


def empirical_field_draw(
    block_sampler: Callable[[np.random.Generator], Configuration],
    n: int,
    rng: np.random.Generator,
    obs_window: Box,
    max_blocks: int = 512,
) -> FieldDraw:
    """One draw from the stationarized block mixture.

    The plane is tiled by disjoint translates of [-n, n)^d; each tile meeting
    the shifted observation window receives an independent copy from
    ``block_sampler`` (a sampler for the law on [-n, n)^d). A uniform integer
    shift from [-n, n)^d inter Z^d is then applied and the union restricted
    to the observation window. Needing more than ``max_blocks`` tiles is an
    error: the observation window outgrew the materialized block set.
    """
    if n < 1:
        raise PreconditionError("block half-width n must be >= 1")
    d = obs_window.dimension
    side = 2 * n
    kappa = np.array([int(rng.integers(-n, n)) for _ in range(d)])
    lo = obs_window.bounds[:, 0] + kappa
    hi = obs_window.bounds[:, 1] + kappa
    j_lo = np.floor((lo + n) / side).astype(int)
    j_hi = np.ceil((hi + n) / side).astype(int) - 1
    counts = j_hi - j_lo + 1
    n_blocks = int(np.prod(counts))
    if n_blocks > max_blocks:
        raise ConfigError(
            f"observation window needs {n_blocks} blocks, above the limit {max_blocks}"
        )
    pts: list[MarkedPoint] = []
    for flat in range(n_blocks):
        idx = []
        rem = flat
        for c in counts:
            idx.append(rem % c)
            rem //= c
        j = j_lo + np.array(idx)
        offset = side * j - kappa
        block = block_sampler(rng)
        for p in block.points:
            loc = tuple(float(x + o) for x, o in zip(p.location, offset))
            pts.append(MarkedPoint(loc, p.mark, p.mark_norm))
    full = Configuration(pts, dimension=d)
    return FieldDraw(restrict(full, obs_window), tuple(int(k) for k in kappa), n_blocks)


# ---------------------------------------------------------------------------
# DLR residuals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DlrReport:
    functional: str
    outer_mean: float
    inner_mean: float
    residual: float
    stderr: float
    n_outer: int
    n_inner: int
    k: float = 3.0

    @property
    def passed(self) -> bool:
        return self.residual <= self.k * self.stderr


def _origin_inradius(window: Window) -> float:
    if isinstance(window, Box):
        lo, hi = window.bounds[:, 0], window.bounds[:, 1]
        if np.any(lo >= 0) or np.any(hi <= 0):
            return -math.inf
        return float(min((-lo).min(), hi.min()))
    if isinstance(window, Ball):
        return window.radius - float(np.linalg.norm(window.center))
    raise PreconditionError("functional support check needs a box or ball window")


def dlr_residual(
    model,
    lam: Window,
    z: float,
    mark_law: MarkLaw,
    outer_samples: Sequence[Configuration],
    functionals: Sequence[LocalFunctional],
    n_inner: int,
    rng: np.random.Generator,
    k: float = 3.0,
) -> tuple[DlrReport, ...]:
    """Paired one-step resampling residuals, one report per functional.

    For each outer sample the window ``lam`` is resampled exactly from the
    conditional kernel given the rest of the configuration (rejection
    sampling, so the model must certify H >= 0), and every functional is
    evaluated on both versions; the residual is |mean difference| with the
    paired standard error, which absorbs outer and inner variance at once.
    All functionals share the same outer and inner draws, so residuals are
    comparable across the library.
    """
    if n_inner < 100:
        raise PreconditionError("inner budget must be at least 100 kernel samples")
    if len(outer_samples) < 2:
        raise PreconditionError("need at least 2 outer samples")
    inradius = _origin_inradius(lam)
    for f in functionals:
        if f.support_radius > inradius:
            raise PreconditionError(
                f"functional {f.name!r} reads outside the resampled window "
                f"(support {f.support_radius} > inradius {inradius})"
            )
    n_outer = len(outer_samples)
    outer_vals = np.empty((len(functionals), n_outer))
    inner_vals = np.empty((len(functionals), n_outer))
    for i, gamma in enumerate(outer_samples):
        env = restrict_complement(gamma, lam)
        inner = rejection_sample(
            model, lam, z, mark_law, n_inner, rng, env=env
        ).samples
        for fi, f in enumerate(functionals):
            outer_vals[fi, i] = f(gamma)
            inner_vals[fi, i] = float(np.mean([f(c) for c in inner]))
    reports = []
    for fi, f in enumerate(functionals):
        diff = outer_vals[fi] - inner_vals[fi]
        se = float(diff.std(ddof=1) / math.sqrt(n_outer))
        reports.append(
            DlrReport(
                f.name,
                float(outer_vals[fi].mean()),
                float(inner_vals[fi].mean()),
                abs(float(diff.mean())),
                se,
                n_outer,
                n_inner,
                k,
            )
        )
    return tuple(reports)
