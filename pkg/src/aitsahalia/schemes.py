"""Time-stepping schemes: tamed semi-implicit, backward Euler, explicit Euler.

The centerpiece is an explicit Euler-type step that keeps the state
positive for every step size.  Only the singular part c_m1 / x of the
drift is treated implicitly; the superlinear parts enter through their
tamed versions f_h, g_h.  Writing theta = -c0 + c1 y + f_h(y), the step

    Y+ = y + c_m1 * h / Y+ + theta * h + g_h(y) * dW

is a scalar quadratic in disguise: with a = y + theta * h + g_h(y) * dW
the update is the unique positive root of G(x) = x - c_m1 * h / x = a,

    Y+ = (a + sqrt(a**2 + 4 c_m1 h)) / 2 > 0,

positive regardless of the sign or size of a, hence for any h > 0 and
any Gaussian increment.  No iteration, one square root.

The backward Euler baseline treats the whole drift implicitly and needs
h < 1 / c1 for the implicit equation to be monotone; its root is found
by a safeguarded Newton iteration inside a sign-change bracket.  The
plain explicit Euler scheme is included as a control: it can and does
leave the positive half-line, which is reported through step statuses
rather than exceptions so harnesses can count failures.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from .model import Array, ModelParams, NonPositiveState, validate
from .taming import TamingConfig, _log_taming_denominator

__all__ = [
    "SchemeKind",
    "StepStatus",
    "StepOutcome",
    "NewtonConfig",
    "SchemeConfig",
    "StepTooLarge",
    "Trajectory",
    "PathBatch",
    "positive_root",
    "tem_step",
    "bem_step",
    "em_step",
    "integrate",
    "integrate_paths",
]


class SchemeKind(Enum):
    TEM = "tem"  # tamed semi-implicit Euler, unconditionally positive
    BEM = "bem"  # backward (fully drift-implicit) Euler
    EM = "em"    # plain explicit Euler, no positivity guarantee


class StepStatus(IntEnum):
    OK = 0
    POSITIVITY_LOST = 1
    SOLVER_FAILED = 2
    OVERFLOW = 3


class StepTooLarge(ValueError):
    """BEM requires h < 1 / c1; larger steps break monotonicity."""


@dataclass(frozen=True)
class NewtonConfig:
    """Safeguarded Newton settings for the implicit BEM step."""

    max_iters: int = 100
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10


@dataclass(frozen=True)
class SchemeConfig:
    """One integration setup: scheme, grid and scheme-specific knobs.

    n_steps * h must reproduce the horizon to within an ulp-scaled
    tolerance; dyadic grids satisfy this exactly.
    """

    kind: SchemeKind
    h: float
    n_steps: int
    horizon: float
    taming: TamingConfig | None = None
    newton: NewtonConfig | None = None

    def __post_init__(self) -> None:
        if not (self.h > 0.0 and math.isfinite(self.h)):
            raise ValueError(f"step size must be finite and > 0, got {self.h!r}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")
        tol = max(1, self.n_steps) * np.spacing(max(self.horizon, 1.0))
        if abs(self.h * self.n_steps - self.horizon) > tol:
            raise ValueError(
                f"h * n_steps = {self.h * self.n_steps!r} does not match horizon {self.horizon!r}"
            )
        if self.kind is SchemeKind.TEM and self.taming is None:
            object.__setattr__(self, "taming", TamingConfig(horizon=max(self.horizon, self.h)))
        if self.kind is SchemeKind.BEM and self.newton is None:
            object.__setattr__(self, "newton", NewtonConfig())

    @classmethod
    def for_level(
        cls,
        kind: SchemeKind,
        horizon: float,
        level: int,
        alpha: float = 0.5,
        newton: NewtonConfig | None = None,
    ) -> SchemeConfig:
        """Dyadic grid with 2**level steps of size horizon * 2**-level."""
        if level < 0:
            raise ValueError(f"level must be >= 0, got {level}")
        taming = TamingConfig(alpha=alpha, horizon=horizon) if kind is SchemeKind.TEM else None
        return cls(kind, horizon * 2.0**-level, 1 << level, horizon, taming, newton)


@dataclass(frozen=True)
class StepOutcome:
    """Result of one step.  On a non-Ok status y_next is the last valid state."""

    y_next: float
    status: StepStatus
    newton_iters: int = 0


# States in the tamed step stay bounded by construction, but randomized
# inputs can push a = y + theta h + g dW arbitrarily far out; past this
# magnitude a**2 overflows and the root is flagged instead of computed.
_ROOT_GUARD = 1e150


def positive_root(a: float | Array, c_m1: float, h: float) -> float | Array:
    """Unique positive root of x - c_m1 * h / x = a.

    The a < 0 branch is rewritten as 2 c_m1 h / (sqrt(a**2 + 4 c_m1 h) - a)
    to avoid the cancellation in a + sqrt(a**2 + ...).
    """
    arr = np.asarray(a, dtype=float)
    s = np.sqrt(arr * arr + 4.0 * c_m1 * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(arr >= 0.0, 0.5 * (arr + s), (2.0 * c_m1 * h) / (s - arr))
    return float(out) if arr.ndim == 0 else out


def _tem_advance(
    params: ModelParams, taming: TamingConfig, h: float, y: Array, dW: Array
) -> tuple[Array, Array]:
    """Vector core of the tamed step: new states and an overflow mask."""
    logy = np.log(y)
    logden = _log_taming_denominator(params, taming, h, logy)
    fh = -params.c2 * np.exp(params.kappa * logy - logden)
    gh = params.c3 * np.exp(params.rho * logy - logden)
    a = y + (-params.c0 + params.c1 * y + fh) * h + gh * dW
    bad = ~np.isfinite(a) | (np.abs(a) > _ROOT_GUARD)
    root = positive_root(np.where(bad, 0.0, a), params.c_m1, h)
    return root, bad


def _bem_solve(
    params: ModelParams, newton: NewtonConfig, h: float, y: Array, dW: Array
) -> tuple[Array, Array, Array]:
    """Solve z - h * drift(z) = y + diffusion(y) * dW for each lane.

    Newton from z0 = max(y, sqrt(c_m1 h)), falling back to bisection of a
    sign-change bracket whenever an iterate escapes it, the derivative
    misbehaves, or |F| fails to decrease.  A lane converges when
    |F(z)| <= abs_tol + rel_tol * |z| or its bracket collapses to a few
    ulps (where fp noise in F, not the root, limits the residual).

    Returns (roots, iteration counts, converged mask).
    """
    c = params
    rhs = y + c.c3 * np.exp(c.rho * np.log(y)) * dW

    def f_and_fp(z: Array) -> tuple[Array, Array]:
        zk = np.exp(c.kappa * np.log(z))
        val = z - h * (c.c_m1 / z - c.c0 + c.c1 * z - c.c2 * zk) - rhs
        slope = 1.0 + h * (c.c_m1 / (z * z) - c.c1 + c.c2 * c.kappa * zk / z)
        return val, slope

    sqrt_ch = math.sqrt(c.c_m1 * h)
    lo = np.minimum(y, sqrt_ch)
    for _ in range(200):
        need = f_and_fp(lo)[0] >= 0.0
        if not need.any():
            break
        lo = np.where(need, 0.5 * lo, lo)
    hi = np.maximum(y, sqrt_ch) + 1.0
    for _ in range(200):
        need = f_and_fp(hi)[0] <= 0.0
        if not need.any():
            break
        hi = np.where(need, 2.0 * hi, hi)

    z = np.clip(np.maximum(y, sqrt_ch), lo, hi)
    converged = np.zeros(z.shape, dtype=bool)
    iters = np.zeros(z.shape, dtype=np.int64)
    prev_absf = np.full(z.shape, np.inf)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(newton.max_iters):
            fval, fslope = f_and_fp(z)
            absf = np.abs(fval)
            converged |= absf <= newton.abs_tol + newton.rel_tol * np.abs(z)
            converged |= (hi - lo) <= 4.0 * np.spacing(hi)
            active = ~converged
            if not active.any():
                break
            neg = active & (fval < 0.0)
            lo = np.where(neg, z, lo)
            hi = np.where(active & ~neg, z, hi)
            cand = z - fval / fslope
            bisect = active & (
                ~np.isfinite(cand) | (cand <= lo) | (cand >= hi) | (absf >= prev_absf)
            )
            cand = np.where(bisect, 0.5 * (lo + hi), cand)
            z = np.where(active, cand, z)
            prev_absf = np.where(active, absf, prev_absf)
            iters += active
    return z, iters, converged


def tem_step(params: ModelParams, cfg: SchemeConfig, y: float, dW: float) -> StepOutcome:
    """One tamed semi-implicit step from state y > 0."""
    _require_kind(cfg, SchemeKind.TEM)
    _require_positive_state(y)
    root, bad = _tem_advance(
        params, cfg.taming, cfg.h, np.asarray([y], dtype=float), np.asarray([dW], dtype=float)
    )
    if bad[0]:
        return StepOutcome(y, StepStatus.OVERFLOW)
    return StepOutcome(float(root[0]), StepStatus.OK)


def bem_step(params: ModelParams, cfg: SchemeConfig, y: float, dW: float) -> StepOutcome:
    """One backward Euler step from state y > 0.  Needs cfg.h < 1 / c1."""
    _require_kind(cfg, SchemeKind.BEM)
    _require_positive_state(y)
    _require_bem_step(params, cfg.h)
    z, iters, ok = _bem_solve(
        params, cfg.newton, cfg.h, np.asarray([y], dtype=float), np.asarray([dW], dtype=float)
    )
    if not ok[0]:
        return StepOutcome(y, StepStatus.SOLVER_FAILED, int(iters[0]))
    return StepOutcome(float(z[0]), StepStatus.OK, int(iters[0]))


def em_step(params: ModelParams, cfg: SchemeConfig, y: float, dW: float) -> StepOutcome:
    """One explicit Euler step.  Never raises; failures land in the status."""
    _require_kind(cfg, SchemeKind.EM)
    if not (y > 0.0 and math.isfinite(y)):
        return StepOutcome(y, StepStatus.POSITIVITY_LOST)
    y_new, state = _em_advance(
        params, cfg.h, np.asarray([y], dtype=float), np.asarray([dW], dtype=float)
    )
    return StepOutcome(float(y_new[0]), StepStatus(int(state[0])))


def _em_advance(params: ModelParams, h: float, y: Array, dW: Array) -> tuple[Array, Array]:
    """Explicit Euler on positive lanes: new states and per-lane statuses."""
    logy = np.log(y)
    with np.errstate(over="ignore", invalid="ignore"):
        dr = (
            params.c_m1 / y
            - params.c0
            + params.c1 * y
            - params.c2 * np.exp(params.kappa * logy)
        )
        di = params.c3 * np.exp(params.rho * logy)
        y_new = y + dr * h + di * dW
    status = np.zeros(y.shape, dtype=np.int8)
    overflow = ~np.isfinite(y_new)
    lost = ~overflow & (y_new <= 0.0)
    status[overflow] = int(StepStatus.OVERFLOW)
    status[lost] = int(StepStatus.POSITIVITY_LOST)
    return np.where(overflow | lost, y, y_new), status


def _require_kind(cfg: SchemeConfig, kind: SchemeKind) -> None:
    if cfg.kind is not kind:
        raise ValueError(f"config is for {cfg.kind.value}, expected {kind.value}")


def _require_positive_state(y: float) -> None:
    if not (y > 0.0 and math.isfinite(y)):
        raise NonPositiveState(f"state must be finite and > 0, got {y!r}")


def _require_bem_step(params: ModelParams, h: float) -> None:
    if h * params.c1 >= 1.0:
        raise StepTooLarge(
            f"backward Euler needs h < 1/c1 = {1.0 / params.c1:g}, got h = {h:g}"
        )


@dataclass
class PathBatch:
    """Rectangular batch of trajectories; failed paths freeze at their last state."""

    states: Array  # (n_paths, n_steps + 1)
    status: Array  # (n_paths,) final StepStatus codes
    first_bad: Array  # (n_paths,) step index of first failure, -1 when clean
    newton_iters: int
    seconds: float

    @property
    def positivity_violations(self) -> int:
        return int(np.sum(self.status == int(StepStatus.POSITIVITY_LOST)))

    @property
    def overflows(self) -> int:
        return int(np.sum(self.status == int(StepStatus.OVERFLOW)))

    @property
    def solver_failures(self) -> int:
        return int(np.sum(self.status == int(StepStatus.SOLVER_FAILED)))


def integrate_paths(params: ModelParams, cfg: SchemeConfig, increments: Array) -> PathBatch:
    """Integrate a batch of paths sharing one SchemeConfig.

    increments has one row per path and cfg.n_steps columns.  The step
    loop is vectorized across paths; lanes that fail stop evolving but
    keep their last valid state in all later columns, which keeps the
    batch rectangular for grid-wise statistics.
    """
    validate(params)
    arr = np.asarray(increments, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != cfg.n_steps:
        raise ValueError(
            f"increments must have shape (n_paths, {cfg.n_steps}), got {arr.shape}"
        )
    if cfg.kind is SchemeKind.BEM and cfg.n_steps > 0:
        _require_bem_step(params, cfg.h)

    n_paths = arr.shape[0]
    states = np.empty((n_paths, cfg.n_steps + 1), dtype=float)
    states[:, 0] = params.x0
    status = np.zeros(n_paths, dtype=np.int8)
    first_bad = np.full(n_paths, -1, dtype=np.int64)
    y = np.full(n_paths, float(params.x0))
    newton_total = 0

    start = time.perf_counter()
    for k in range(cfg.n_steps):
        alive = status == 0
        if not alive.any():
            states[:, k + 1 :] = y[:, None]
            break
        idx = np.nonzero(alive)[0] if not alive.all() else slice(None)
        ya = y[idx]
        dWa = arr[idx, k]

        if cfg.kind is SchemeKind.TEM:
            y_new, bad = _tem_advance(params, cfg.taming, cfg.h, ya, dWa)
            lane_status = np.where(bad, np.int8(StepStatus.OVERFLOW), np.int8(0))
            y_new = np.where(bad, ya, y_new)
        elif cfg.kind is SchemeKind.BEM:
            y_new, iters, ok = _bem_solve(params, cfg.newton, cfg.h, ya, dWa)
            newton_total += int(iters.sum())
            lane_status = np.where(~ok, np.int8(StepStatus.SOLVER_FAILED), np.int8(0))
            y_new = np.where(~ok, ya, y_new)
        else:
            y_new, lane_status = _em_advance(params, cfg.h, ya, dWa)

        failed = lane_status != 0
        if failed.any():
            lanes = idx if isinstance(idx, np.ndarray) else np.arange(n_paths)
            bad_lanes = lanes[failed]
            status[bad_lanes] = lane_status[failed]
            first_bad[bad_lanes] = k
        y[idx] = y_new
        states[:, k + 1] = y
    seconds = time.perf_counter() - start

    return PathBatch(states, status, first_bad, newton_total, seconds)


@dataclass
class Trajectory:
    """One path on its time grid, truncated at the first failed step.

    statuses has one entry per attempted step; on failure the final entry
    carries the failure code and states keeps only the valid prefix.
    """

    times: Array
    states: Array
    statuses: Array
    flag: StepStatus
    stopped_at: int | None
    newton_iters: int
    seconds: float


def integrate(params: ModelParams, cfg: SchemeConfig, increments: Array) -> Trajectory:
    """Integrate a single path over cfg.n_steps increments."""
    arr = np.asarray(increments, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != cfg.n_steps:
        raise ValueError(f"increments must have shape ({cfg.n_steps},), got {arr.shape}")
    batch = integrate_paths(params, cfg, arr[None, :])
    flag = StepStatus(int(batch.status[0]))
    bad_at = int(batch.first_bad[0])
    if flag is StepStatus.OK:
        states = batch.states[0]
        statuses = np.zeros(cfg.n_steps, dtype=np.int8)
        stopped_at = None
    else:
        states = batch.states[0, : bad_at + 1]
        statuses = np.zeros(bad_at + 1, dtype=np.int8)
        statuses[bad_at] = int(flag)
        stopped_at = bad_at
    times = cfg.h * np.arange(len(states))
    return Trajectory(times, states, statuses, flag, stopped_at, batch.newton_iters, batch.seconds)
