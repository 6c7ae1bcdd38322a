"""Strong-error and moment studies over batches of coupled paths.

The strong-error study integrates every scheme on dyadic coarsenings of
the same per-path Brownian lattice used for the fine reference solution,
so test and reference trajectories are coupled path by path.  The error
at step size h is

    e_h = sqrt( max_n  mean_m |X_ref(t_n, omega_m) - Y_n(omega_m)|**2 )

with the max over the coarse grid points t_n.  Work is split into fixed
consecutive path batches; partial sums are reduced in batch order, so
results are bitwise identical no matter how many worker processes run
the batches.  Wall-clock timings cover only the integration loops.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import ModelParams, RegimeKind, classify_regime, validate
from .noise import coarsen_block, generate_block
from .schemes import (
    NewtonConfig,
    SchemeConfig,
    SchemeKind,
    StepStatus,
    StepTooLarge,
    integrate_paths,
)

__all__ = [
    "RateFit",
    "DegenerateFit",
    "RefNotFiner",
    "ConvergenceReport",
    "MomentReport",
    "fit_rate",
    "strong_error_study",
    "moment_study",
]


class DegenerateFit(ValueError):
    """Not enough distinct step sizes to fit a rate."""


class RefNotFiner(ValueError):
    """A test level is finer than the reference level."""


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log2 e_h against log2 h.

    resid is the 2-norm of the fit residuals in log2 space.
    """

    q: float
    resid: float


def fit_rate(points: Iterable[tuple[float, float]]) -> RateFit:
    """Fit e_h ~ C * h**q through (h, e_h) pairs by ordinary least squares."""
    pts = list(points)
    if len(pts) < 2:
        raise DegenerateFit(f"need at least two points, got {len(pts)}")
    h = np.asarray([p[0] for p in pts], dtype=float)
    e = np.asarray([p[1] for p in pts], dtype=float)
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(e))):
        raise ValueError("step sizes and errors must be finite")
    if np.any(h <= 0.0) or np.any(e <= 0.0):
        raise ValueError("step sizes and errors must be > 0")
    if np.all(h == h[0]):
        raise DegenerateFit("all step sizes are equal")
    x = np.log2(h)
    y = np.log2(e)
    xc = x - x.mean()
    q = float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
    b = float(y.mean() - q * x.mean())
    resid = float(np.linalg.norm(y - (q * x + b)))
    return RateFit(q=q, resid=resid)


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-scheme errors, rate fits, timings and failure counts."""

    preset_id: str
    schemes: tuple[SchemeKind, ...]
    ref_scheme: SchemeKind
    ref_level: int
    levels: tuple[int, ...]
    step_sizes: tuple[float, ...]
    n_paths: int
    seed: int
    horizon: float
    alpha: float
    errors: dict[SchemeKind, tuple[float, ...]]
    fits: dict[SchemeKind, RateFit | None]
    timings: dict[SchemeKind, tuple[float, ...]]
    violations: dict[SchemeKind, tuple[int, ...]]
    reference_seconds: float

    def scheme_seconds(self, kind: SchemeKind) -> float:
        return float(sum(self.timings[kind]))


@dataclass(frozen=True)
class _StudyTask:
    params: ModelParams
    schemes: tuple[SchemeKind, ...]
    ref_scheme: SchemeKind
    ref_level: int
    levels: tuple[int, ...]
    seed: int
    start: int
    count: int
    horizon: float
    alpha: float
    newton: NewtonConfig | None


def _study_batch(task: _StudyTask):
    """Partial sums for one batch of consecutive paths.

    Runs in worker processes; everything it returns is combined in batch
    order by the caller, so per-batch arithmetic must not depend on how
    batches are assigned to workers (it does not: inputs are fully
    determined by the task).
    """
    fine = generate_block(task.seed, task.start, task.count, task.horizon, task.ref_level)
    ref_cfg = SchemeConfig.for_level(
        task.ref_scheme, task.horizon, task.ref_level, alpha=task.alpha, newton=task.newton
    )
    ref = integrate_paths(task.params, ref_cfg, fine)
    out = {}
    for level in task.levels:
        coarse = coarsen_block(fine, task.ref_level, level)
        stride = 1 << (task.ref_level - level)
        ref_states = ref.states[:, ::stride]
        for kind in task.schemes:
            cfg = SchemeConfig.for_level(
                kind, task.horizon, level, alpha=task.alpha, newton=task.newton
            )
            batch = integrate_paths(task.params, cfg, coarse)
            diff = batch.states - ref_states
            sq = np.sum(diff * diff, axis=0)
            out[(kind, level)] = (sq, batch.positivity_violations, batch.seconds)
    return ref.seconds, out


def strong_error_study(
    params: ModelParams,
    schemes: Sequence[SchemeKind],
    n_paths: int,
    ref_level: int,
    test_levels: Sequence[int],
    seed: int,
    *,
    horizon: float = 1.0,
    alpha: float = 0.5,
    ref_scheme: SchemeKind = SchemeKind.BEM,
    newton: NewtonConfig | None = None,
    workers: int = 1,
    batch_size: int = 256,
    preset_id: str = "custom",
) -> ConvergenceReport:
    """Coupled strong-error study of one or more schemes against a reference.

    test levels may equal ref_level (a scheme against itself reproduces
    e_h = 0 exactly) but never exceed it.  batch_size is part of the
    reproducibility contract: together with the seed it fixes every
    floating-point reduction, while `workers` only distributes batches.
    """
    validate(params)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if not test_levels:
        raise ValueError("need at least one test level")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    levels = tuple(sorted(set(int(l) for l in test_levels)))
    if levels[0] < 0:
        raise ValueError("levels must be >= 0")
    if levels[-1] > ref_level:
        raise RefNotFiner(
            f"reference level {ref_level} is coarser than test level {levels[-1]}"
        )
    kinds = tuple(dict.fromkeys(schemes))
    if not kinds:
        raise ValueError("need at least one scheme")
    # fail fast on the BEM step bound before any path is generated
    bem_levels = list(levels) if SchemeKind.BEM in kinds else []
    if ref_scheme is SchemeKind.BEM:
        bem_levels.append(ref_level)
    for level in bem_levels:
        bem_h = horizon * 2.0**-level
        if bem_h * params.c1 >= 1.0:
            raise StepTooLarge(
                f"BEM at level {level}: h = {bem_h:g} >= 1/c1 = {1.0 / params.c1:g}"
            )

    tasks = [
        _StudyTask(
            params,
            kinds,
            ref_scheme,
            ref_level,
            levels,
            seed,
            start,
            min(batch_size, n_paths - start),
            horizon,
            alpha,
            newton,
        )
        for start in range(0, n_paths, batch_size)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_study_batch, tasks))
    else:
        results = [_study_batch(t) for t in tasks]

    ref_seconds = 0.0
    sq_totals: dict[tuple[SchemeKind, int], np.ndarray] = {}
    viol_totals: dict[tuple[SchemeKind, int], int] = {}
    sec_totals: dict[tuple[SchemeKind, int], float] = {}
    for ref_sec, partial in results:
        ref_seconds += ref_sec
        for key, (sq, viol, sec) in partial.items():
            if key in sq_totals:
                sq_totals[key] = sq_totals[key] + sq
            else:
                sq_totals[key] = sq
            viol_totals[key] = viol_totals.get(key, 0) + viol
            sec_totals[key] = sec_totals.get(key, 0.0) + sec

    errors = {
        kind: tuple(
            float(math.sqrt(np.max(sq_totals[(kind, level)]) / n_paths)) for level in levels
        )
        for kind in kinds
    }
    step_sizes = tuple(horizon * 2.0**-level for level in levels)
    fits: dict[SchemeKind, RateFit | None] = {}
    for kind in kinds:
        pts = list(zip(step_sizes, errors[kind]))
        if len(pts) >= 3 and all(e > 0.0 for _, e in pts):
            fits[kind] = fit_rate(pts)
        else:
            fits[kind] = None
    timings = {
        kind: tuple(sec_totals[(kind, level)] for level in levels) for kind in kinds
    }
    violations = {
        kind: tuple(viol_totals[(kind, level)] for level in levels) for kind in kinds
    }
    return ConvergenceReport(
        preset_id=preset_id,
        schemes=kinds,
        ref_scheme=ref_scheme,
        ref_level=ref_level,
        levels=levels,
        step_sizes=step_sizes,
        n_paths=n_paths,
        seed=seed,
        horizon=horizon,
        alpha=alpha,
        errors=errors,
        fits=fits,
        timings=timings,
        violations=violations,
        reference_seconds=ref_seconds,
    )


@dataclass(frozen=True)
class MomentReport:
    """Grid suprema of empirical p-th absolute moments across step sizes.

    stable[p] records the factor-2 heuristic: the sup varies by less than
    a factor of two across the scanned step sizes.  censored counts paths
    that stopped early (relevant for EM); their last valid state is
    carried forward into the moment sums.
    """

    preset_id: str
    scheme: SchemeKind
    p_values: tuple[float, ...]
    levels: tuple[int, ...]
    h_values: tuple[float, ...]
    n_paths: int
    seed: int
    horizon: float
    alpha: float
    inverse: bool
    sup_moments: dict[tuple[float, int], float]
    per_step: dict[tuple[float, int], np.ndarray]
    censored: dict[int, int]
    stable: dict[float, bool]
    insufficient_samples: bool


def moment_study(
    params: ModelParams,
    scheme: SchemeKind,
    p_values: Sequence[float],
    levels: Sequence[int],
    n_paths: int,
    seed: int,
    *,
    horizon: float = 1.0,
    alpha: float = 0.5,
    newton: NewtonConfig | None = None,
    inverse: bool = False,
    batch_size: int = 1024,
    preset_id: str = "custom",
) -> MomentReport:
    """Empirical sup_n E|Y_n|**p across step sizes h = horizon * 2**-level.

    With inverse=True the study tracks E|1/Y_n|**p instead.  A single
    path is accepted but flagged via insufficient_samples.
    """
    validate(params)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    ps = tuple(float(p) for p in p_values)
    if not ps or any(p <= 0.0 for p in ps):
        raise ValueError("moment orders must be positive")
    lvls = tuple(sorted(set(int(l) for l in levels)))
    if not lvls:
        raise ValueError("need at least one level")

    regime = classify_regime(params, alpha)
    if regime.kind is RegimeKind.CRITICAL:
        p_cap = 2.0 * regime.ratio + 1.0
        for p in ps:
            if p > p_cap:
                warnings.warn(
                    f"moment order p = {p:g} exceeds the critical-regime cap "
                    f"2 c2/c3**2 + 1 = {p_cap:g}; bounds are not guaranteed",
                    stacklevel=2,
                )

    sup_moments: dict[tuple[float, int], float] = {}
    per_step: dict[tuple[float, int], np.ndarray] = {}
    censored: dict[int, int] = {}
    for level in lvls:
        cfg = SchemeConfig.for_level(scheme, horizon, level, alpha=alpha, newton=newton)
        sums = {p: np.zeros(cfg.n_steps + 1) for p in ps}
        stopped = 0
        for start in range(0, n_paths, batch_size):
            count = min(batch_size, n_paths - start)
            block = generate_block(seed, start, count, horizon, level)
            batch = integrate_paths(params, cfg, block)
            vals = 1.0 / batch.states if inverse else batch.states
            for p in ps:
                sums[p] += np.sum(vals**p, axis=0)
            stopped += int(np.sum(batch.status != int(StepStatus.OK)))
        censored[level] = stopped
        for p in ps:
            series = sums[p] / n_paths
            per_step[(p, level)] = series
            sup_moments[(p, level)] = float(np.max(series))

    stable = {}
    for p in ps:
        sups = [sup_moments[(p, level)] for level in lvls]
        stable[p] = max(sups) <= 2.0 * min(sups)

    return MomentReport(
        preset_id=preset_id,
        scheme=scheme,
        p_values=ps,
        levels=lvls,
        h_values=tuple(horizon * 2.0**-level for level in lvls),
        n_paths=n_paths,
        seed=seed,
        horizon=horizon,
        alpha=alpha,
        inverse=inverse,
        sup_moments=sup_moments,
        per_step=per_step,
        censored=censored,
        stable=stable,
        insufficient_samples=n_paths < 2,
    )
